"""Regenerate the golden replay fixture in data/golden/.

A 40-second river transit with one vessel crossing from starboard:
early frames see open water, later frames carry a live track, so a
replay exercises detection, tracking, projection, and planning.  The
output is deterministic; rerunning this script must not change the
checked-in bytes.
"""

import gzip
import math
import os

from rivernav.fileio import dump_chart, format_odom, format_scan
from rivernav.geometry import Polyline, UtmPoint
from rivernav.planner import GlobalPath
from rivernav.radar import OwnshipState
from rivernav.simulator import Scenario, TargetScript, river_chart, run

OUT_DIR = os.path.join(os.path.dirname(__file__), "..", "data", "golden")

CONFIG_TEXT = """# Configuration used by the golden replay.
global_path = 250,100; 250,700
"""


def main() -> None:
    chart = river_chart()
    scenario = Scenario(
        chart=chart,
        ownship_start=OwnshipState(UtmPoint(250.0, 100.0), 0.0, 3.0, 0.0),
        global_path=GlobalPath(Polyline([(250.0, 100.0), (250.0, 700.0)])),
        targets=(
            TargetScript(
                position=UtmPoint(330.0, 230.0),
                heading=1.5 * math.pi,
                speed=1.0,
            ),
        ),
        duration=40.0,
        seed=424242,
        kind="crossing_right",
        name="golden",
    )

    _, log = run(scenario, collect_raw=True)
    assert log.scan_lines is not None

    records = []
    for state in log.own:
        records.append((state.timestamp, 0, format_odom(state)))
    for line in log.scan_lines:
        records.append((line.timestamp, 1, format_scan(line)))
    records.sort(key=lambda r: (r[0], r[1]))

    os.makedirs(OUT_DIR, exist_ok=True)
    log_path = os.path.join(OUT_DIR, "golden.log.gz")
    # Fixed mtime so gzip output is byte-stable across regenerations.
    with open(log_path, "wb") as raw:
        with gzip.GzipFile(fileobj=raw, mode="wb", mtime=0) as fh:
            for _, _, text in records:
                fh.write(text.encode("ascii"))
                fh.write(b"\n")
    with open(os.path.join(OUT_DIR, "chart.txt"), "w", encoding="utf-8") as fh:
        fh.write(dump_chart(chart))
    with open(os.path.join(OUT_DIR, "golden.cfg"), "w", encoding="utf-8") as fh:
        fh.write(CONFIG_TEXT)
    print("wrote %s (%d records)" % (log_path, len(records)))


if __name__ == "__main__":
    main()
