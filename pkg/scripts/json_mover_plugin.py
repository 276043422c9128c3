#!/usr/bin/env python3
"""Reference copytool plugin: stores objects in a directory given as argv[1],
speaking the line-delimited JSON protocol on stdin/stdout."""

import base64
import json
import sys
import uuid
from pathlib import Path


def main():
    root = Path(sys.argv[1])
    root.mkdir(parents=True, exist_ok=True)
    for line in sys.stdin:
        try:
            req = json.loads(line)
            op = req["op"]
            if op == "archive":
                ref = f"ext-{uuid.uuid4().hex}"
                (root / ref).write_bytes(base64.b64decode(req["data"]))
                resp = {"ok": True, "ref": ref}
            elif op == "restore":
                path = root / req["ref"]
                if not path.exists():
                    resp = {"ok": False, "error": "no such ref", "unknown_ref": True}
                else:
                    resp = {"ok": True,
                            "data": base64.b64encode(path.read_bytes()).decode()}
            elif op == "remove":
                path = root / req["ref"]
                if not path.exists():
                    resp = {"ok": False, "error": "no such ref", "unknown_ref": True}
                else:
                    path.unlink()
                    resp = {"ok": True}
            else:
                resp = {"ok": False, "error": f"unknown op {op!r}"}
        except Exception as e:  # malformed request; keep serving
            resp = {"ok": False, "error": str(e)}
        sys.stdout.write(json.dumps(resp) + "\n")
        sys.stdout.flush()


if __name__ == "__main__":
    main()
