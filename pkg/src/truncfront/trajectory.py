"""Tip trajectories shared by the lattice and continuum simulators, plus CSV I/O."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Optional


class TipSample(NamedTuple):
    t: float
    left_tip: float
    right_tip: float
    n_particles: int
    q_estimate: float = math.nan


@dataclass
class TipTrajectory:
    samples: list[TipSample] = field(default_factory=list)
    seed: Optional[int] = None
    config_digest: str = ""
    # set when the run stopped before its horizon (event budget or window cap)
    truncated: bool = False

    def append(self, *args) -> None:
        self.samples.append(TipSample(*args))

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def times(self) -> list[float]:
        return [s.t for s in self.samples]

    def column(self, name: str) -> list:
        return [getattr(s, name) for s in self.samples]

    @property
    def t_final(self) -> float:
        return self.samples[-1].t if self.samples else 0.0

    def spread(self) -> list[float]:
        """``X_t = -left_tip`` (distance from the origin to the leftmost particle)."""
        return [-s.left_tip for s in self.samples]

    def check_invariants(self) -> None:
        prev = None
        for s in self.samples:
            if prev is not None:
                if not s.t > prev.t:
                    raise AssertionError(f"time not increasing at {s}")
                if s.left_tip > prev.left_tip or s.right_tip < prev.right_tip:
                    raise AssertionError(f"tip moved inwards at {s}")
                if s.n_particles < prev.n_particles:
                    raise AssertionError(f"particle count decreased at {s}")
                if not (math.isnan(s.q_estimate) or s.q_estimate >= prev.q_estimate):
                    raise AssertionError(f"Q estimate decreased at {s}")
            prev = s


LATTICE_COLUMNS = ("t", "left_tip", "right_tip", "n_particles", "q_estimate")
CONTINUUM_COLUMNS = ("t", "left_tip", "right_tip", "n_particles")


def _fmt(x) -> str:
    if isinstance(x, float):
        return "" if math.isnan(x) else repr(x)
    return str(x)


def write_csv(traj: TipTrajectory, path, columns=LATTICE_COLUMNS) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for s in traj.samples:
            w.writerow([_fmt(getattr(s, c)) for c in columns])
    return path


def read_csv(path) -> TipTrajectory:
    traj = TipTrajectory()
    with Path(path).open(newline="") as fh:
        for row in csv.DictReader(fh):
            q = row.get("q_estimate", "")
            left, right = row["left_tip"], row["right_tip"]
            conv = float if ("." in left or "e" in left) else int
            traj.append(
                float(row["t"]),
                conv(left),
                conv(right),
                int(row["n_particles"]),
                float(q) if q else math.nan,
            )
    return traj
