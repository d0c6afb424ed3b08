"""Rendering of reward tables, equilibrium reports and simulation results."""

from __future__ import annotations

import csv
import io
import json
import math
from fractions import Fraction

from .equilibrium import BestResponseSet, EquilibriumReport
from .slot_simulator import Comparison, SimulationResult


def exact(x):
    """JSON form of a rational: int when whole, ``"p/q"`` otherwise."""
    if x is None:
        return None
    x = Fraction(x)
    return x.numerator if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def gwei(x) -> str:
    """Two-decimal GWei, floored."""
    if x is None:
        return "-"
    cents = math.floor(Fraction(x) * 100)
    sign = "-" if cents < 0 else ""
    whole, frac = divmod(abs(cents), 100)
    return f"{sign}{whole}.{frac:02d}"


def table(header: list[str], rows: list[list[str]]) -> str:
    widths = [max(len(str(c)) for c in col) for col in zip(header, *rows)]
    lines = ["  ".join(str(c).ljust(w) for c, w in zip(header, widths)).rstrip(),
             "  ".join("-" * w for w in widths)]
    lines += ["  ".join(str(c).ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows]
    return "\n".join(lines) + "\n"


def csv_text(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


# -- equilibrium ------------------------------------------------------------


def best_response_dict(br: BestResponseSet) -> dict:
    return {
        "as_proposer": sorted(a.value for a in br.as_proposer),
        "as_attester": sorted(a.value for a in br.as_attester),
        "gap_proposer": exact(br.gap_proposer),
        "gap_attester": exact(br.gap_attester),
    }


def equilibrium_dict(rep: EquilibriumReport) -> dict:
    return {
        "n_agents": rep.n_agents,
        "method": rep.method,
        "bne_verdict": rep.bne_verdict,
        "flagged_agents": list(rep.flagged_agents),
        "dominance_verdict": rep.dominance_verdict,
        "dominance": rep.dominance_label,
        "min_gap": exact(rep.min_gap),
        "best_responses": [best_response_dict(b) for b in rep.best_responses],
        "case_breakdown": {
            label: {
                "reachable": row.reachable,
                "eu_cooperate": exact(row.eu_cooperate),
                "eu_deviate": exact(row.eu_deviate),
                "gap": exact(row.gap),
                "atoms": row.atoms,
            }
            for label, row in rep.case_breakdown.items()
        },
    }


CASE_HEADER = ["case", "EU(C)", "EU(D)", "gap", "dominance", "atoms"]


def case_rows(rep: EquilibriumReport) -> list[list[str]]:
    out = []
    for label, row in rep.case_breakdown.items():
        if row.reachable:
            kind = "strict" if row.gap > 0 else ("weak" if row.gap == 0 else "violated")
        else:
            kind = "unreachable"
        out.append([label, gwei(row.eu_cooperate), gwei(row.eu_deviate), gwei(row.gap), kind, str(row.atoms)])
    return out


def equilibrium_table(bne: EquilibriumReport, dom: EquilibriumReport) -> str:
    head = (
        f"agents: {dom.n_agents}  method: {dom.method}\n"
        f"all-Cooperate is a BNE: {bne.bne_verdict}\n"
        f"Cooperate ex ante dominant: {dom.dominance_verdict} ({dom.dominance_label}, min gap {gwei(dom.min_gap)} GWei)\n"
        f"best responses: {', '.join(sorted({b.label() for b in bne.best_responses}))}\n\n"
    )
    return head + table(CASE_HEADER, case_rows(dom))


# -- simulation -------------------------------------------------------------


def simulation_dict(res: SimulationResult, comparisons: list[Comparison] | None = None) -> dict:
    out = {
        "n_agents": res.n_agents,
        "epochs": res.epochs,
        "slots_per_epoch": res.slots_per_epoch,
        "rng_seed": res.rng_seed,
        "totals": list(res.totals),
        "counts": [{f"{r}{a}": c for (r, a), c in cnt.items()} for cnt in res.counts],
        "mean": list(res.mean),
        "std_error": list(res.std_error),
        "leak_epochs": res.leak_epochs,
    }
    if comparisons is not None:
        out["analytic"] = [exact(c.analytic) for c in comparisons]
        out["z"] = [c.z for c in comparisons]
    out["trace"] = [
        {
            "epoch": t.epoch,
            "finalized": t.finalized,
            "leak_during": t.leak_during,
            "leak_active": t.leak_active,
            "consecutive_unfinalized": t.consecutive_unfinalized,
            "nets": list(t.nets),
        }
        for t in res.trace
    ]
    return out


def trace_csv(res: SimulationResult) -> str:
    header = ["epoch", "finalized", "leak_active", "leak_during", "consecutive_unfinalized"]
    header += [f"net_agent_{j}" for j in range(res.n_agents)]
    rows = [
        [t.epoch, int(t.finalized), int(t.leak_active), int(t.leak_during), t.consecutive_unfinalized, *t.nets]
        for t in res.trace
    ]
    return csv_text(header, rows)


def simulation_table(res: SimulationResult, comparisons: list[Comparison]) -> str:
    first_leak = next((t.epoch for t in res.trace if t.leak_active), None)
    head = (
        f"agents: {res.n_agents}  epochs: {res.epochs}  slots: {res.slots}  seed: {res.rng_seed}\n"
        f"leak epochs: {res.leak_epochs}  leak onset: {first_leak if first_leak else 'none'}\n\n"
    )
    rows = [
        [str(c.agent), f"{c.empirical:.2f}", gwei(c.analytic), f"{c.std_error:.2f}", f"{c.z:+.2f}"]
        for c in comparisons
    ]
    return head + table(["agent", "empirical", "analytic", "std err", "z"], rows)
