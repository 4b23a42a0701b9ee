"""Where explanation guarantees hold and where they break."""
from scabstract.monitor import invert, verify_constraint1, verify_constraint2
from scabstract.errors import AmbiguousExplanation
from scabstract.bat import GroundAction
from scabstract.project import load_fixture

for name in ("logistics", "logistics-guarded", "overlap"):
    m = load_fixture(name).mapping
    print(f"== {name}")
    for v in (verify_constraint1(m), verify_constraint2(m)):
        for line in v.lines():
            print(line)

m = load_fixture("overlap").mapping
try:
    invert([GroundAction("D", ())], m, require_constraint=False)
except AmbiguousExplanation as exc:
    print("overlap:", exc)
