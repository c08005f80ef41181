"""Singular-perturbation diagnostic: descend E_eps along a decreasing eps schedule."""

import argparse
import time
from dataclasses import dataclass

import numpy as np

from hilbert16.ode_oracle import find_limit_cycle
from hilbert16.poly import PlanarSystem
from hilbert16.variational import (
    DescentOptions,
    continuation,
    energy_config,
    energy_E0,
    hessian_spectrum,
    positively_oriented,
    z_profile,
)


@dataclass
class Config:
    K: int = 64
    eps_start: float = 1e-3
    eps_end: float = 1e-5
    max_iters: int = 5000
    spectrum: bool = False


def main(cfg: Config) -> None:
    sys = PlanarSystem.from_strings("y - (x^3/3 - x)", "-x")
    start = positively_oriented(find_limit_cycle(sys, "x=0+", K=cfg.K).to_path())
    n = int(round(np.log10(cfg.eps_start / cfg.eps_end))) + 1
    schedule = tuple(np.logspace(np.log10(cfg.eps_start), np.log10(cfg.eps_end), n))
    opts = DescentOptions(h2_precondition=True, max_iters=cfg.max_iters)
    print(f"{'eps':>8} {'reason':>20} {'E0':>10} {'z2var/mean2':>12} {'med|Div|':>9} {'lmin':>10}")
    t = time.perf_counter()
    for eps, res in continuation(start, sys, schedule, opts):
        prof = z_profile(res.path, sys)
        ratio = prof.z2_var / prof.z2_mean**2 if prof.z2_mean > 0 else float("nan")
        lmin = float("nan")
        if cfg.spectrum:
            lmin = hessian_spectrum(res.path, sys, energy_config(eps, cfg.K), m=1).eigenvalues[0]
        print(
            f"{eps:>8.0e} {res.reason:>20} {energy_E0(res.path, sys):>10.3e} {ratio:>12.3g} "
            f"{np.median(np.abs(prof.div)):>9.3g} {lmin:>10.2e}"
        )
    print(f"total {time.perf_counter() - t:.1f}s")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--K", type=int, default=Config.K)
    ap.add_argument("--eps-start", type=float, default=Config.eps_start)
    ap.add_argument("--eps-end", type=float, default=Config.eps_end)
    ap.add_argument("--max-iters", type=int, default=Config.max_iters)
    ap.add_argument("--spectrum", action="store_true")
    main(Config(**vars(ap.parse_args())))
