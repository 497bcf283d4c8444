"""Price of anarchy of the nonlinear Pigou instance against demand growth.

Compares solver output with the closed form for each degree and prints a
CSV ``p,eps,poa_numeric,poa_closed_form,rel_err``; also reports where
``(1 + eps)**p`` crosses the worst-case cap.

    python scripts/pigou_curves.py --degrees 1 2 3 4 --eps-max 2 --count 21
"""
import argparse
import sys

import numpy as np

from wardrop_sense.builtin import PigouSpec, gen_pigou, pigou_poa_closed_form
from wardrop_sense.sensitivity import effective_epsilon_max, price_of_anarchy


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--degrees", type=int, nargs="+", default=[1, 2, 3, 4])
    parser.add_argument("--eps-max", type=float, default=2.0)
    parser.add_argument("--count", type=int, default=21)
    args = parser.parse_args(argv)

    print("p,eps,poa_numeric,poa_closed_form,rel_err")
    for p in args.degrees:
        for eps in np.linspace(0, args.eps_max, args.count):
            rho, _, _ = price_of_anarchy(gen_pigou(PigouSpec(p, 1 + eps)), workers=1)
            exact = pigou_poa_closed_form(p, eps)
            print(f"{p},{eps:.6g},{rho:.12g},{exact:.12g},{abs(rho / exact - 1):.3e}")
    for p in args.degrees:
        print(f"p={p}: (1+eps)^p reaches the cap at eps={effective_epsilon_max(p):.6f}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
