"""Regenerate the committed 1,000-row credit sample.

The rows are synthetic but use the public dataset's header, its "NA"
convention for missing cells, and a blank leading index column.  A few
rows carry past-due counts and dependents above the caps so that every
preprocessing rule is exercised.

    python3 tools/make_credit_sample.py src/groupattr/data/credit_sample.csv
"""

import csv
import sys

import numpy as np

HEADER = [
    "", "SeriousDlqin2yrs", "RevolvingUtilizationOfUnsecuredLines", "age",
    "NumberOfTime30-59DaysPastDueNotWorse", "DebtRatio", "MonthlyIncome",
    "NumberOfOpenCreditLinesAndLoans", "NumberOfTimes90DaysLate",
    "NumberRealEstateLoansOrLines", "NumberOfTime60-89DaysPastDueNotWorse",
    "NumberOfDependents",
]


def rows(n=1000, seed=20240501):
    rng = np.random.default_rng(seed)
    for k in range(1, n + 1):
        late30 = int(rng.poisson(0.4))
        late60 = int(rng.poisson(0.15))
        late90 = int(rng.poisson(0.2))
        if rng.random() < 0.03:
            late90 = int(rng.choice([5, 7, 12, 96, 98]))
        util = round(float(rng.beta(0.7, 1.5) * (1.3 if rng.random() < 0.1 else 1.0)), 6)
        age = int(rng.integers(21, 90))
        debt = round(float(rng.gamma(1.2, 0.35)), 6)
        income = str(int(rng.lognormal(8.6, 0.7)))
        if rng.random() < 0.15:
            income = "NA"
        lines = int(rng.poisson(8))
        estate = int(rng.poisson(1))
        deps = str(int(rng.poisson(0.8)))
        if rng.random() < 0.01:
            deps = str(int(rng.integers(6, 11)))
        if rng.random() < 0.03:
            deps = "NA"
        logit = -4.0 + 1.0 * min(late90, 4) + 0.7 * late60 + 0.5 * late30 + 1.5 * util
        y = int(rng.random() < 1.0 / (1.0 + np.exp(-logit)))
        yield [k, y, util, age, late30, debt, income, lines, late90, estate, late60, deps]


def main(path):
    with open(path, "w", newline="") as handle:
        w = csv.writer(handle, lineterminator="\n")
        w.writerow(HEADER)
        w.writerows(rows())


if __name__ == "__main__":
    main(sys.argv[1])
