"""Keeps docs/config.schema.json in step with the config loader."""
import json
import subprocess
import sys
from pathlib import Path

import jsonschema

cli, schema_path, data = sys.argv[1], Path(sys.argv[2]), Path(sys.argv[3])
validator = jsonschema.Draft202012Validator(json.loads(schema_path.read_text()))

failures = []
for path in sorted(data.glob("*.json")):
    doc = json.loads(path.read_text())
    run = subprocess.run([cli, "validate", "--config", str(path)], capture_output=True, text=True)
    schema_ok = validator.is_valid(doc)
    if run.returncode == 0:
        if not schema_ok:
            failures.append(f"{path.name}: accepted by the loader, rejected by the schema")
        resolved = json.loads(run.stdout.split("\n", 1)[1])
        if not validator.is_valid(resolved):
            failures.append(f"{path.name}: resolved config rejected by the schema")
    elif schema_ok and path.name in ("bad_gamma.json", "bad_mesh.json"):
        failures.append(f"{path.name}: rejected by the loader, accepted by the schema")

print("\n".join(failures) or "schema consistent with loader")
sys.exit(1 if failures else 0)
