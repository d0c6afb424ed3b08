"""Per-epoch rewards, penalties and cost across validator-set sizes."""

import argparse

from eth2game.incentive_model import IncentiveParams, NetworkParams, summarize
from eth2game.report import gwei, table


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--validators", type=int, nargs="+", default=[100_000, 250_000, 500_000, 1_000_000])
    args = ap.parse_args()
    rows = []
    for n in args.validators:
        s = summarize(IncentiveParams(network=NetworkParams(n_validators=n)))
        rows.append([str(n), gwei(s.base_reward), gwei(s.attestation), gwei(s.attester_penalty),
                     gwei(s.sync), gwei(s.proposer_total), gwei(s.cost_per_epoch)])
    print(table(["validators", "BR", "R^A", "P^A", "R^C", "R^P", "cost/epoch"], rows), end="")


if __name__ == "__main__":
    main()
