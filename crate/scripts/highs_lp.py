#!/usr/bin/env python3
"""Solve a CPLEX LP file with HiGHS and print the solution for `trn`.

Usage: highs_lp.py MODEL.lp

Output:
    status feasible|infeasible|unknown
    <var> <value>   (one line per column, feasible only)
"""
import sys

import highspy


def main() -> int:
    if len(sys.argv) != 2:
        print("usage: highs_lp.py MODEL.lp", file=sys.stderr)
        return 2
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("threads", 1)
    if h.readModel(sys.argv[1]) != highspy.HighsStatus.kOk:
        print(f"cannot read {sys.argv[1]}", file=sys.stderr)
        return 1
    h.run()
    status = h.getModelStatus()
    ms = highspy.HighsModelStatus
    if status == ms.kOptimal:
        print("status feasible")
        lp = h.getLp()
        names = lp.col_names_
        values = h.getSolution().col_value
        for name, value in zip(names, values):
            print(f"{name} {value!r}")
    elif status in (ms.kInfeasible, ms.kUnboundedOrInfeasible):
        print("status infeasible")
    else:
        print("status unknown")
    return 0


if __name__ == "__main__":
    sys.exit(main())
