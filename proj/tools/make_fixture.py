#!/usr/bin/env python3
"""Writes the small synthetic flow table used by the tests (tests/data/flows.csv).

Six classes over twelve numeric features plus Timestamp and Label columns.
The SlowHTTPTest class is drawn from the same distribution as FTP-BruteForce
so that it cannot be told apart. A handful of rows carry NaN / Infinity cells
and one repeated header row appears mid-file.
"""
import random
import sys

FEATURES = [
    "Dst Port", "Protocol", "Flow Duration", "Tot Fwd Pkts", "Tot Bwd Pkts",
    "Fwd Pkt Len Max", "Fwd Seg Size Min", "SYN Flag Cnt", "Flow IAT Mean",
    "Init Fwd Win Byts", "Pkt Len Std", "Idle Mean",
]

# Class -> per-feature mean offsets (features not listed stay at 0).
CENTERS = {
    "Benign": {},
    "Bot": {6: 3.0, 7: -2.5},
    "DDoS attacks-LOIC-HTTP": {2: 2.5, 10: 2.0},
    "FTP-BruteForce": {0: -2.5, 9: 2.5},
    "SSH-Bruteforce": {3: 3.0, 6: -2.0},
    "DoS attacks-SlowHTTPTest": {0: -2.5, 9: 2.5},
}
ROWS_PER_CLASS = 90


def main(path):
    rng = random.Random(20180214)
    rows = []
    for label, center in CENTERS.items():
        for _ in range(ROWS_PER_CLASS):
            values = [rng.gauss(center.get(j, 0.0), 1.0) for j in range(len(FEATURES))]
            rows.append((label, values))
    rng.shuffle(rows)

    header = FEATURES[:2] + ["Timestamp"] + FEATURES[2:] + ["Label"]
    lines = [",".join(header)]
    for i, (label, values) in enumerate(rows):
        cells = [f"{v:.6f}" for v in values]
        if i in (17, 203):
            cells[4] = "NaN"
        if i == 311:
            cells[8] = "Infinity"
        stamp = f"14/02/2018 {8 + i // 3600:02d}:{(i // 60) % 60:02d}:{i % 60:02d}"
        lines.append(",".join(cells[:2] + [stamp] + cells[2:] + [label]))
        if i == 250:
            lines.append(",".join(header))
    with open(path, "w", newline="\n") as f:
        f.write("\n".join(lines) + "\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "tests/data/flows.csv")
