# -*- coding: utf-8 -*-

##
## Escape-point sweeps: W_LdG and the leading-order energy per configuration,
## optionally with the full eps ladder, written as one CSV row per configuration.
##

import logging
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from ldg2of.analysis.expansion import run_expansion
from ldg2of.common.errors import InvalidParams
from ldg2of.common.types import EscapeConfig, FlowConfig, MaterialParams, SweepRow
from ldg2of.conformal.construct import conformal_field
from ldg2of.energy.functionals import oseen_frank_energy, w_ldg
from ldg2of.grid.domain import DomainGrid

logger = logging.getLogger(__name__)

MODES = ("formula", "full-solve")


def radius_sweep_configs(start: float = 0.0, stop: float = 0.8, step: float = 0.1,
                         angle: float = 0.0) -> List[EscapeConfig]:
    """Single escape point moving outward along a ray, inclusive of `stop`."""
    count = int(round((stop - start) / step)) + 1
    radii = start + step * np.arange(count)
    return [EscapeConfig(m=1, points=[(float(r * np.cos(angle)), float(r * np.sin(angle)))]) for r in radii]


def pair_sweep_configs(separations: Sequence[float]) -> List[EscapeConfig]:
    """Degree-2 configurations with points at (+-d/2, 0)."""
    return [EscapeConfig(m=2, points=[(0.5 * d, 0.0), (-0.5 * d, 0.0)]) for d in separations]


def escape_sweep(configs: Sequence[EscapeConfig], grid: DomainGrid, params: MaterialParams,
                 mode: str = "formula", eps_list: Optional[Sequence[float]] = None,
                 flow: Optional[FlowConfig] = None) -> List[SweepRow]:
    if mode not in MODES:
        raise InvalidParams(f"unknown sweep mode '{mode}', expected one of {MODES}")
    if mode == "full-solve" and not eps_list:
        raise InvalidParams("a full-solve sweep needs an eps list")
    rows = []
    for cfg_id, cfg in enumerate(configs):
        n = conformal_field(cfg, grid)
        row = SweepRow(cfg_id=cfg_id, m=cfg.m, points=cfg.points_text(), E0=oseen_frank_energy(n, params),
                       W_ldg=w_ldg(n, params, check=False))
        if mode == "full-solve":
            ladder = run_expansion(grid, params, cfg, eps_list, flow).report
            row.E_eps = list(ladder.energies)
            fit = ladder.fits.get("energy")
            if fit is not None:
                row.fit_coeff = fit.coefficient
                row.fit_exponent = fit.exponent
        logger.debug(f"cfg {cfg_id}: m={cfg.m} points={row.points} E0={row.E0:.8g} W_ldg={row.W_ldg:.8g}")
        rows.append(row)
    return rows


def sweep_frame(rows: Sequence[SweepRow], eps_list: Sequence[float] = ()) -> pd.DataFrame:
    """Columns cfg_id, m, points, E0, W_ldg, E_eps(eps=...)..., fit_coeff, fit_exponent."""
    eps_columns = [f"E_eps(eps={float(e)!r})" for e in eps_list]
    records = []
    for row in rows:
        record = {"cfg_id": row.cfg_id, "m": row.m, "points": row.points, "E0": row.E0, "W_ldg": row.W_ldg}
        for i, column in enumerate(eps_columns):
            record[column] = row.E_eps[i] if i < len(row.E_eps) else np.nan
        record["fit_coeff"] = np.nan if row.fit_coeff is None else row.fit_coeff
        record["fit_exponent"] = np.nan if row.fit_exponent is None else row.fit_exponent
        records.append(record)
    columns = ["cfg_id", "m", "points", "E0", "W_ldg"] + eps_columns + ["fit_coeff", "fit_exponent"]
    return pd.DataFrame(records, columns=columns)


def write_csv(rows: Sequence[SweepRow], path: Union[str, Path], eps_list: Sequence[float] = ()) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    sweep_frame(rows, eps_list).to_csv(path, index=False, float_format=lambda v: repr(float(v)))
    logger.info(f"Wrote {len(rows)} sweep rows to {path}")
    return path
