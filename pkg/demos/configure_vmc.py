"""Walk through an interactive configuration of the vehicle-control model:
decide, watch propagation, provoke a conflict, undo, enumerate.

Run from the repository root:  python3 demos/configure_vmc.py
"""

from pathlib import Path

from featline.parser import parse
from featline.session import Conflict, Restriction, Session

MODEL = Path(__file__).resolve().parent.parent / "tests/fixtures/vmc.fm"


def show(delta):
    for var in delta.changed:
        print(f"    {var.name}: {var.domain!r} ({var.status})")


def main():
    m, diagnostics = parse(MODEL.read_text())
    assert m is not None and not diagnostics

    s = Session(m)
    view = s.view()
    print(f"{m.name}: {len(view.vars)} variables, "
          f"{'exactly' if view.exact else 'at least'} {view.remaining} "
          "configurations\n")

    print("decide: at least one speed sensor")
    show(s.decide("SpeedSensor", Restriction.at_least(1)))

    print("\nwhat-if: make visual and audio feedback exclusive")
    show(s.add_constraint("Visual + Audio = 1"))

    print("\ndecide: visual feedback on")
    show(s.decide("Visual", Restriction.fix(1)))

    print("\ndecide: audio feedback on as well")
    out = s.decide("Audio", Restriction.fix(1))
    assert isinstance(out, Conflict)
    print(f"    rejected: {out.action}")
    print(f"    culprit:  {out.culprit}")
    print(f"    variable: {out.variable}")

    print("\nthe rejection left no trace; log is", len(s.log), "entries")

    print("\nfirst three configurations under these decisions:")
    for _ in range(3):
        sol = s.next_solution()
        if sol is None:
            break
        chosen = [k for k, v in sol.items()
                  if isinstance(v, int) and v > 0 and "." not in k]
        print("   ", ", ".join(chosen))

    print("\nundo everything")
    s.undo(len(s.log))
    view = s.view()
    tail = "configurations" if view.exact else "configurations (count capped)"
    print("back to", view.remaining, tail)


if __name__ == "__main__":
    main()
