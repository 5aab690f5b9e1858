#!/usr/bin/env python3
"""Loopback worker for the seedtune/1 protocol: reports config["x"] as the reward.

Useful for checking an installation with `seedtune validate-worker --cmd "python scripts/echo_worker.py"`.
"""
import json
import sys


def main() -> int:
    sys.stdout.write(json.dumps({"protocol": "seedtune/1"}) + "\n")
    sys.stdout.flush()
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        request = json.loads(line)
        config = request.get("config", {})
        if "x" in config:
            reply = {"id": request["id"], "value": float(config["x"])}
        else:
            reply = {"id": request["id"], "error": "config has no parameter 'x'"}
        sys.stdout.write(json.dumps(reply) + "\n")
        sys.stdout.flush()
    return 0


if __name__ == "__main__":
    sys.exit(main())
