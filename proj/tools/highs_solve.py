#!/usr/bin/env python3
"""Solve an LP file with HiGHS and write one 'name value' line per column.

Usage: highs_solve.py MODEL.lp SOLUTION
Exit status 0 on a feasible solution, 2 if the model is infeasible, 1 otherwise.
"""
import sys

import highspy


def main(argv):
    if len(argv) != 3:
        print("usage: highs_solve.py MODEL.lp SOLUTION", file=sys.stderr)
        return 1
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    if h.readModel(argv[1]) == highspy.HighsStatus.kError:
        print(f"cannot read {argv[1]}", file=sys.stderr)
        return 1
    h.run()
    status = h.getModelStatus()
    if status == highspy.HighsModelStatus.kInfeasible:
        print("infeasible", file=sys.stderr)
        return 2
    if status != highspy.HighsModelStatus.kOptimal:
        print(h.modelStatusToString(status), file=sys.stderr)
        return 1
    values = h.getSolution().col_value
    names = h.getLp().col_names_
    with open(argv[2], "w") as out:
        for name, v in zip(names, values):
            out.write(f"{name} {v:.12g}\n")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
