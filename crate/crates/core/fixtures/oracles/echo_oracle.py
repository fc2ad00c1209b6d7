#!/usr/bin/env python3
"""Scores the function named on the command line 1.0 and everything else 0."""
import json
import sys

favourite = sys.argv[1] if len(sys.argv) > 1 else ""
for line in sys.stdin:
    request = json.loads(line)
    hit = request["function_name"] == favourite
    reply = {"score": 1.0 if hit else 0.0, "predicted_cwes": ["CWE-787"] if hit else []}
    print(json.dumps(reply), flush=True)
