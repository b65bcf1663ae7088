#!/usr/bin/env python3
"""Solve an exported MPS file and print `objective: <value>`.

Uses highspy when installed, else scipy's HiGHS wrapper on a minimal free-MPS
reader. Exit status 0 on optimal, 2 if the LP is infeasible or unbounded,
1 on usage errors or missing solvers.
"""
import argparse
import sys


def solve_highspy(path):
    import highspy

    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    if h.readModel(path) != highspy.HighsStatus.kOk:
        raise RuntimeError(f"highspy could not read {path}")
    h.run()
    status = h.modelStatusToString(h.getModelStatus())
    if status != "Optimal":
        return status, None
    return status, h.getInfo().objective_function_value


def read_free_mps(path):
    rows, senses, cols, rhs, bounds = [], {}, {}, {}, {}
    objective_row, maximize, section = None, False, None
    with open(path) as f:
        for raw in f:
            line = raw.strip()
            if not line or line.startswith("*"):
                continue
            if not raw[0].isspace():
                head = line.split()
                section = head[0]
                if section == "OBJSENSE" and len(head) > 1:
                    maximize = head[1].startswith("MAX")
                continue
            tok = line.split()
            if section == "OBJSENSE":
                maximize = tok[0].startswith("MAX")
            elif section == "ROWS":
                if tok[0] == "N":
                    objective_row = tok[1]
                else:
                    senses[tok[1]] = tok[0]
                    rows.append(tok[1])
            elif section == "COLUMNS":
                if "MARKER" in tok:
                    continue
                entries = cols.setdefault(tok[0], {})
                for i in range(1, len(tok), 2):
                    entries[tok[i]] = float(tok[i + 1])
            elif section == "RHS":
                for i in range(1, len(tok), 2):
                    rhs[tok[i]] = float(tok[i + 1])
            elif section == "BOUNDS":
                kind, name = tok[0], tok[2]
                lo, hi = bounds.get(name, (0.0, None))
                value = float(tok[3]) if len(tok) > 3 else None
                if kind == "UP":
                    hi = value
                elif kind == "LO":
                    lo = value
                elif kind == "FX":
                    lo = hi = value
                elif kind == "FR":
                    lo, hi = None, None
                elif kind == "MI":
                    lo = None
                elif kind == "PL":
                    hi = None
                bounds[name] = (lo, hi)
    return rows, senses, cols, rhs, bounds, objective_row, maximize


def solve_scipy(path):
    import numpy as np
    from scipy.optimize import linprog
    from scipy.sparse import lil_matrix

    rows, senses, cols, rhs, bounds, obj_row, maximize = read_free_mps(path)
    names = list(cols)
    index = {r: i for i, r in enumerate(rows)}
    c = np.zeros(len(names))
    a = lil_matrix((len(rows), len(names)))
    for j, name in enumerate(names):
        for row, v in cols[name].items():
            if row == obj_row:
                c[j] = v
            else:
                a[index[row], j] = v
    sign = -1.0 if maximize else 1.0
    ub_rows = [r for r in rows if senses[r] in ("L", "G")]
    eq_rows = [r for r in rows if senses[r] == "E"]
    a = a.tocsr()

    def block(selected, flip):
        if not selected:
            return None, None
        idx = [index[r] for r in selected]
        m = a[idx]
        b = np.array([rhs.get(r, 0.0) for r in selected])
        if flip:
            f = np.array([-1.0 if senses[r] == "G" else 1.0 for r in selected])
            m = m.multiply(f[:, None]).tocsr()
            b = b * f
        return m, b

    a_ub, b_ub = block(ub_rows, True)
    a_eq, b_eq = block(eq_rows, False)
    res = linprog(
        sign * c,
        A_ub=a_ub,
        b_ub=b_ub,
        A_eq=a_eq,
        b_eq=b_eq,
        bounds=[bounds.get(n, (0.0, None)) for n in names],
        method="highs",
    )
    if res.status != 0:
        return res.message, None
    return "Optimal", sign * res.fun


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("mps")
    parser.add_argument("--backend", choices=["auto", "highspy", "scipy"], default="auto")
    args = parser.parse_args()

    backends = {"highspy": solve_highspy, "scipy": solve_scipy}
    order = ["highspy", "scipy"] if args.backend == "auto" else [args.backend]
    for name in order:
        try:
            status, value = backends[name](args.mps)
        except ImportError:
            continue
        if value is None:
            print(f"status: {status}", file=sys.stderr)
            return 2
        print(f"objective: {value:.17g}")
        return 0
    print("no LP backend available (install highspy or scipy)", file=sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())
