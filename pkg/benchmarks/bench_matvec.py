"""Compare the compiled and pure-numpy Hamiltonian kernels.

    python3 benchmarks/bench_matvec.py [--repeat 5]

Both kernels run on the same sector basis and input vector; the script
checks that they agree before timing them.
"""
import argparse
import timeit

import numpy as np

from critx.ed import _kernels_py, build_sector_basis, ground_sector
from critx.ed.hamiltonian import HamiltonianOperator
from critx.models import ModelSpec

try:
    from critx.ed import _kernels
except ImportError:
    _kernels = None

CASES = [
    ("tfim L=16", ModelSpec.tfim(16, 1.0)),
    ("tfim L=20", ModelSpec.tfim(20, 1.0)),
    ("spin1 L=10", ModelSpec.spin1(10, 2.59, 2.3)),
    ("spin1 L=12", ModelSpec.spin1(12, 2.59, 2.3)),
]


def kernel_call(module, op, v, out):
    b = op.basis
    if op.model.family.value == "tfim":
        return lambda: module.tfim_matvec(v, out, b.states, b.lookup, op.diag, op._masks, -1.0)
    return lambda: module.spin1_matvec(v, out, b.states, b.digits, b.lookup, op.diag,
                                       op._bond_i, op._bond_j, op._pow3, 1.0)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    if _kernels is None:
        raise SystemExit("compiled kernels are not built; run `pip install -e . --no-build-isolation`")

    print(f"{'case':<12} {'dim':>8} {'python [ms]':>12} {'cython [ms]':>12} {'speedup':>8}")
    rng = np.random.default_rng(0)
    for name, model in CASES:
        basis = build_sector_basis(model, ground_sector(model))
        op = HamiltonianOperator(model, basis)
        v = rng.standard_normal(basis.dim)
        out_py, out_cy = np.empty(basis.dim), np.empty(basis.dim)
        run_py = kernel_call(_kernels_py, op, v, out_py)
        run_cy = kernel_call(_kernels, op, v, out_cy)
        run_py()
        run_cy()
        np.testing.assert_allclose(out_cy, out_py, rtol=0, atol=1e-12)
        t_py = min(timeit.repeat(run_py, number=1, repeat=args.repeat)) * 1e3
        t_cy = min(timeit.repeat(run_cy, number=1, repeat=args.repeat)) * 1e3
        print(f"{name:<12} {basis.dim:>8} {t_py:>12.2f} {t_cy:>12.2f} {t_py / t_cy:>7.1f}x")


if __name__ == "__main__":
    main()
