"""Runs the CLI and validates every JSON document it emits against tests/schemas."""
import json
import pathlib
import subprocess
import sys
import tempfile

import jsonschema
from referencing import Registry, Resource

cli, root = sys.argv[1], pathlib.Path(sys.argv[2])
schemas = root / "tests" / "schemas"
data = root / "data"

registry = Registry()
for path in schemas.glob("*.json"):
    registry = registry.with_resource(path.name, Resource.from_contents(json.loads(path.read_text())))


def validate(name, doc):
    schema = json.loads((schemas / name).read_text())
    jsonschema.Draft202012Validator(schema, registry=registry).validate(doc)


def run(*args, code=0):
    proc = subprocess.run([cli, *map(str, args)], capture_output=True, text=True)
    if proc.returncode != code:
        sys.exit(f"{args}: exit {proc.returncode}, expected {code}\n{proc.stderr}")
    return proc.stdout


icy = data / "icy.hmm.json"
validate("hmm.json", json.loads(icy.read_text()))
for name in ("monitorA.dfa.json", "monitorB.dfa.json"):
    validate("dfa.json", json.loads((data / name).read_text()))

th = ["--ls", "1/4", "--lu", "1/4", "--horizon", "3"]
validate("verdict.json", json.loads(run("verify", icy, data / "monitorA.dfa.json", *th)))
validate("verdict.json", json.loads(run("verify", icy, data / "monitorB.dfa.json", *th, code=2)))
validate("verdict.json", json.loads(run("verify", icy, data / "monitorB.dfa.json", *th, "--check", "false", "--timings", code=2)))

with tempfile.TemporaryDirectory() as tmp:
    prefix = pathlib.Path(tmp) / "learned"
    report = run("learn", icy, "--ls", "1/10", "--ll", "3/10", "--lu", "7/20", "--horizon", "5", "-o", prefix, "--timings")
    validate("learn-report.json", json.loads(report))
    validate("dfa.json", json.loads(prefix.with_suffix(".dfa.json").read_text()))
    validate("learn-report.json", json.loads(run("learn", icy, *th, "--max-states", "1", code=3)))

    cnf = pathlib.Path(tmp) / "f.cnf"
    cnf.write_text("p cnf 2 2\n1 -2 0\n2 0\n")
    validate("hmm.json", json.loads(run("gadget", cnf)))

for variant in ("exact", "upto"):
    for mode in ("missed", "false"):
        out = run("export", icy, "--monitor", data / "monitorB.dfa.json", "--horizon", "3",
                  "--variant", variant, "--mode", mode)
        validate("colored-mdp.json", json.loads(out))

print("all CLI JSON outputs match their schemas")
