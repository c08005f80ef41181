"""Print the degree-only bound next to its component-cap decomposition."""

import argparse
from dataclasses import dataclass

from hilbert16.bounds import harnack_max_components, master_bound, quartic_bound, quartic_component_cap


@dataclass
class Config:
    n_max: int = 12


def main(cfg: Config) -> None:
    print(f"{'n':>3} {'quartic':>10} {'cap':>5} {'harnack(n-1)':>13} {'master w/ harnack':>18}")
    for n in range(2, cfg.n_max + 1):
        h = harnack_max_components(n - 1)
        print(
            f"{n:>3} {quartic_bound(n):>10} {quartic_component_cap(n):>5} {h:>13} "
            f"{master_bound(n, h, 2 * (n - 1) ** 2):>18}"
        )


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n-max", type=int, default=Config.n_max)
    main(Config(ap.parse_args().n_max))
