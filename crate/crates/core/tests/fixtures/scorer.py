"""Test double for the external-scorer line protocol.

Usage: scorer.py MODE
  uniform    every candidate scores 0
  prefer-eos the end symbol scores 1, everything else 0
  short      one score too few
  malformed  answers with text that is not JSON
  error      answers with an error object
  exit       exits after the first request
  silent     reads requests and never answers
"""

import json
import sys


def main():
    mode = sys.argv[1] if len(sys.argv) > 1 else "uniform"
    for line in sys.stdin:
        request = json.loads(line)
        candidates = request["candidates"]
        if mode == "uniform":
            reply = {"scores": [0.0] * len(candidates)}
        elif mode == "prefer-eos":
            reply = {"scores": [1.0 if c == "</s>" else 0.0 for c in candidates]}
        elif mode == "short":
            reply = {"scores": [0.0] * (len(candidates) - 1)}
        elif mode == "malformed":
            sys.stdout.write("not json\n")
            sys.stdout.flush()
            continue
        elif mode == "error":
            reply = {"error": "model unavailable"}
        elif mode == "exit":
            return
        elif mode == "silent":
            continue
        else:
            raise SystemExit("unknown mode " + mode)
        sys.stdout.write(json.dumps(reply) + "\n")
        sys.stdout.flush()


if __name__ == "__main__":
    main()
