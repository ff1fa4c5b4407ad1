"""COLREGs-aware navigation stack for small autonomous surface vessels.

Pipeline stages: marine-radar scanline processing and target extraction
(`radar`), multi-target Kalman tracking (`tracking`), rule-based forbidden
area projection (`colregs`), contour-detour path planning (`planner`), a
closed-loop encounter simulator (`simulator`) and a log-replay CLI (`cli`).
"""

__version__ = "0.1.0"
