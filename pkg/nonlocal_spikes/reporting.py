"""Result files and the checksummed run manifest."""

from __future__ import annotations

import csv
import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Iterable, Optional

import numpy as np

from .components.continuation import ContinuationResult, PeriodicReport, TailReport
from .components.groundstate import GroundState
from .components.solver import SpikeSolution

logger = logging.getLogger(__name__)

DIAGNOSTIC_COLUMNS = (
    "mu", "eps", "amplitude", "residual_original", "relative_residual", "norm_w", "norm_v_h",
    "norm_u_perp", "symmetry_error", "symmetry_skipped", "leading_amplitude",
)


def _to_builtin(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"Cannot serialize {type(value).__name__}")


def mu_tag(mu: float) -> str:
    return f"{mu:.6g}".replace("-", "m")


class ReportWriter:
    """Writes artifacts into one output directory and keeps the manifest."""

    def __init__(self, out_dir: str | Path):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.files: list[Path] = []
        self.profiles: list[tuple[float, Path]] = []
        self.tails: list[tuple[float, Path]] = []
        self.diagnostics: list[dict[str, Any]] = []

    def _register(self, path: Path) -> Path:
        if path not in self.files:
            self.files.append(path)
        logger.debug(f"Wrote {path}")
        return path

    def write_json(self, name: str, data: Any) -> Path:
        path = self.out_dir / name
        with open(path, "w") as f:
            json.dump(data, f, indent=2, sort_keys=True, default=_to_builtin)
            f.write("\n")
        return self._register(path)

    def write_hypotheses(self, report: dict[str, Any]) -> Path:
        return self.write_json("hypotheses.json", report)

    def write_ground_state(self, ground: GroundState) -> Path:
        return self._register(ground.to_csv(self.out_dir / "ground_state.csv"))

    def add_solution(self, solution: SpikeSolution) -> Path:
        """Physical and rescaled profile CSVs plus one diagnostics row."""
        path, rescaled = solution.write_profiles(self.out_dir, f"_mu_{mu_tag(solution.mu)}")
        self.profiles.append((solution.mu, path))
        row = {"mu": solution.mu, "eps": solution.eps, "amplitude": solution.amplitude}
        row.update({key: solution.diagnostics.get(key) for key in DIAGNOSTIC_COLUMNS if key not in row})
        self.diagnostics.append(row)
        self._register(rescaled)
        return self._register(path)

    def add_tail(self, report: TailReport, mu: float) -> Path:
        path = report.to_csv(self.out_dir / f"tail_mu_{mu_tag(mu)}.csv")
        self.tails.append((mu, path))
        return self._register(path)

    def write_diagnostics(self) -> Optional[Path]:
        if not self.diagnostics:
            return None
        path = self.out_dir / "diagnostics.csv"
        with open(path, "w", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=list(DIAGNOSTIC_COLUMNS))
            writer.writeheader()
            for row in self.diagnostics:
                writer.writerow({k: "" if v is None else repr(float(v)) for k, v in row.items()})
        return self._register(path)

    def write_sweep(self, result: ContinuationResult) -> list[Path]:
        return [
            self._register(result.to_csv(self.out_dir / "sweep.csv")),
            self._register(result.to_json(self.out_dir / "sweep.json")),
        ]

    def write_periodic(self, report: PeriodicReport) -> Path:
        return self.write_json("periodic.json", report.to_dict())

    def register(self, paths: Iterable[Path]) -> None:
        for path in paths:
            self._register(Path(path))

    def write_plots(self) -> Optional[Path]:
        """gnuplot script for the emitted profiles, tails and sweep."""
        if not (self.profiles or self.tails):
            return None
        lines = ["set datafile separator ','", "set key autotitle columnhead", ""]
        if self.profiles:
            lines += ["set title 'Spike profiles'", "set xlabel 'x1'", "set ylabel 'u1'"]
            plots = [f"'{p.name}' using 1:{_value_column(p)} with lines title 'mu = {mu:g}'" for mu, p in self.profiles]
            lines += ["plot " + ", \\\n     ".join(plots), "pause -1", ""]
        if self.tails:
            lines += ["set title 'Tail profiles'", "set logscale y", "set xlabel 'x'", "set ylabel '|u|'"]
            plots = [f"'{p.name}' using 1:2 with lines title 'mu = {mu:g}'" for mu, p in self.tails]
            lines += ["plot " + ", \\\n     ".join(plots), "unset logscale y", "pause -1", ""]
        if any(p.name == "sweep.csv" for p in self.files):
            lines += [
                "set title 'Amplitude against mu'", "set logscale xy", "set xlabel 'mu'", "set ylabel 'max |U|'",
                "plot 'sweep.csv' using 1:3 with linespoints title 'amplitude'", "pause -1", "",
            ]
        path = self.out_dir / "plots.gp"
        path.write_text("\n".join(lines))
        return self._register(path)

    def write_summary(self, status: int, data: dict[str, Any]) -> Path:
        """summary.json listing every emitted file with its sha256."""
        manifest = [
            {"file": path.name, "sha256": hashlib.sha256(path.read_bytes()).hexdigest()}
            for path in self.files
        ]
        summary = {"exit_status": status, "files": manifest, **data}
        path = self.out_dir / "summary.json"
        with open(path, "w") as f:
            json.dump(summary, f, indent=2, sort_keys=True, default=_to_builtin)
            f.write("\n")
        logger.info(f"Summary with {len(manifest)} files written to {path}")
        return path


def _value_column(path: Path) -> int:
    with open(path) as f:
        header = f.readline().strip().split(",")
    return header.index("u1") + 1 if "u1" in header else 2
