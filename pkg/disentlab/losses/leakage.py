"""Conditional decorrelation between the medical latent and the SA label.

The DR label is correlated with the SA by construction, so ``z_med`` is
allowed to carry whatever SA information comes with DR. What it may not carry
is SA information *within* a DR class, which is exactly the image shortcut.
Both the latent and the SA label are centred inside each DR stratum before
their correlation is taken.
"""

from __future__ import annotations

import torch
from torch import Tensor

from disentlab._types import MISSING

LEAKAGE_EPS = 1e-12


def _stratum_centred(values: Tensor, strata: Tensor) -> Tensor:
    means = []
    for k in (0, 1):
        rows = values[strata == k]
        if rows.shape[0]:
            means.append(rows.mean(dim=0))
        else:
            means.append(values.new_zeros(values.shape[1:]))
    return values - torch.stack(means)[strata]


def sa_leakage_loss(z_med: Tensor, y_sensit: Tensor, y_med: Tensor) -> Tensor:
    """Squared DR-conditional correlation of each ``z_med`` coordinate with the SA.

    The squares are summed over coordinates and rows with a missing SA are
    ignored. The value is 0 when no stratum in the batch holds both SA groups,
    and never exceeds the number of coordinates.

    Raises
    ------
    ValueError
        If the three inputs disagree on the batch size.
    """
    if not z_med.shape[0] == y_sensit.shape[0] == y_med.shape[0]:
        raise ValueError(
            f"Batch sizes differ: z_med {z_med.shape[0]}, SA {y_sensit.shape[0]}, "
            f"DR {y_med.shape[0]}."
        )
    keep = y_sensit != MISSING
    z = z_med[keep]
    strata = y_med[keep].long()
    s = y_sensit[keep].to(z.dtype)[:, None]
    if z.shape[0] < 2:
        return z_med.new_zeros(())
    z_c = _stratum_centred(z, strata)
    s_c = _stratum_centred(s, strata)
    s_ss = (s_c * s_c).sum()
    if float(s_ss) == 0.0:
        return z_med.new_zeros(())
    cov = (z_c * s_c).sum(dim=0)
    r = cov / torch.sqrt((z_c * z_c).sum(dim=0) * s_ss + LEAKAGE_EPS)
    return (r * r).sum()
