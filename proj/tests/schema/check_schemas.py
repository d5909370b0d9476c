"""Validates every JSON artifact the esic binary emits against schema/*.json."""

import json
import pathlib
import subprocess
import sys
import tempfile

import jsonschema


def load(path):
    with open(path, encoding="utf-8") as f:
        return json.load(f)


def main():
    esic, root = sys.argv[1], pathlib.Path(sys.argv[2])
    schemas = {}
    for path in sorted((root / "schema").glob("*.schema.json")):
        schema = load(path)
        jsonschema.Draft202012Validator.check_schema(schema)
        schemas[path.name.split(".")[0]] = jsonschema.Draft202012Validator(schema)
    assert set(schemas) == {"system", "fabric", "manifest", "report", "trace"}, schemas.keys()

    failures = 0

    def check(kind, doc, label):
        nonlocal failures
        errors = sorted(schemas[kind].iter_errors(doc), key=lambda e: list(e.path))
        for e in errors[:5]:
            print(f"FAIL {label}: {kind}: {list(e.path)}: {e.message}")
        failures += bool(errors)

    designs = sorted((root / "designs").glob("*.json"))
    assert designs
    with tempfile.TemporaryDirectory() as tmp:
        tmp = pathlib.Path(tmp)
        for design in designs:
            check("system", load(design), design.name)
            status = subprocess.run([esic, "check", str(design)], capture_output=True).returncode
            if status != 0:
                continue
            subprocess.run([esic, "elaborate", str(design), "--out", str(tmp / "g.json")], check=True)
            check("fabric", load(tmp / "g.json"), design.name)
            subprocess.run([esic, "schema", str(design), "--json", str(tmp / "m.json")], check=True)
            check("manifest", load(tmp / "m.json"), design.name)
            for stall in ("0", "0.3"):
                out = subprocess.run(
                    [esic, "sim", str(design), "--ticks", "400", "--seed", "3", "--stall", stall,
                     "--trace", str(tmp / "t.ndjson")],
                    check=True, capture_output=True, text=True).stdout
                check("report", json.loads(out), f"{design.name} stall {stall}")
                lines = (tmp / "t.ndjson").read_text().splitlines()
                assert lines, design.name
                for n, line in enumerate(lines):
                    check("trace", json.loads(line), f"{design.name} trace line {n + 1}")

        # Negative controls: each schema must reject an obviously broken document.
        for kind, doc in [("system", {"name": "x"}),
                          ("fabric", {"version": 2}),
                          ("manifest", {"protocol_version": 1, "design": "d",
                                        "endpoints": [{"endpoint_id": 0, "name": "a",
                                                       "direction": "up", "type": "uint8",
                                                       "type_id": "xyz"}]}),
                          ("report", {"version": 1}),
                          ("trace", {"tick": 0, "edge": 0, "kind": "xfer", "ordinal": 0})]:
            if schemas[kind].is_valid(doc):
                print(f"FAIL {kind} schema accepted a broken document")
                failures += 1

    print(f"{len(designs)} designs validated, {failures} failures")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
