"""Plan at the route level, refine to roads, then read the roads back as routes."""
from scabstract import kernel as k
from scabstract.abstraction import check_complete, check_sound
from scabstract.monitor import forecast_next, invert, verify_constraint1
from scabstract.planning import PlanRequest, plan, refine_plan
from scabstract.project import load_fixture


def main():
    p = load_fixture("logistics")
    m = p.mapping

    print("sound:", check_sound(m).sound)
    complete = check_complete(m)
    print("complete:", complete.complete)
    for w in complete.witnesses:
        print("  ", w.detail)

    hl_plan = plan(p.hl, PlanRequest(k.atom("Delivered", "123")))
    print("plan:", ", ".join(map(str, hl_plan)))

    r = refine_plan(hl_plan, m)
    for alpha, seg in r.segments:
        print(f"  {alpha} -> {', '.join(map(str, seg))}")

    verify_constraint1(m)
    e = invert(r.ll_trace[:3], m)
    print("first three road moves explain as:")
    for line in e.lines():
        print("  ", line)

    f = forecast_next(e.hl_sequence, p.hl)
    print("what may come next:")
    for line in f.lines():
        print("  ", line)


if __name__ == "__main__":
    main()
