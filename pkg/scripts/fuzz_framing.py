#!/usr/bin/env python3
"""Throw random byte strings at decode_frame and count the outcomes.

decode_frame must total-function its input: every call returns a message
dict or a FrameError value.  Any raised exception is a bug and exits 1.
"""

from __future__ import annotations

import argparse
import random
import struct
import sys
import time

from stagelink.framing import MAX_FRAME, FrameError, decode_frame, encode_frame

HEADER = struct.Struct(">I")


def build_input(rng: random.Random) -> bytes:
    roll = rng.random()
    if roll < 0.70:
        return rng.randbytes(rng.randint(0, 24))
    if roll < 0.85:
        return HEADER.pack(rng.randint(0, 200)) + rng.randbytes(rng.randint(0, 64))
    if roll < 0.95:
        frame = bytearray(
            encode_frame({"type": "hello", "seq": rng.randint(0, 9), "ts": rng.randint(0, 99)})
        )
        frame[rng.randrange(len(frame))] ^= 1 << rng.randint(0, 7)
        if roll < 0.90:
            return bytes(frame[: rng.randint(0, len(frame))])
        return bytes(frame)
    return HEADER.pack(MAX_FRAME + rng.randint(1, 1 << 20)) + rng.randbytes(8)


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--count", type=int, default=1_000_000)
    ap.add_argument("--seed", type=int, default=0xF8A3E5)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    messages = errors = 0
    t0 = time.perf_counter()
    for i in range(args.count):
        data = build_input(rng)
        try:
            result, consumed = decode_frame(data)
        except Exception as exc:
            print(f"CRASH on input {i}: {data!r}\n  {type(exc).__name__}: {exc}")
            return 1
        if not isinstance(consumed, int) or consumed < 0:
            print(f"BAD CONSUMED on input {i}: {consumed!r}")
            return 1
        if isinstance(result, dict):
            messages += 1
        elif isinstance(result, FrameError):
            errors += 1
        else:
            print(f"BAD RESULT on input {i}: {result!r}")
            return 1
    wall = time.perf_counter() - t0
    rate = args.count / wall if wall else float("inf")
    print(f"{args.count} inputs in {wall:.1f}s ({rate:,.0f}/s): "
          f"{messages} messages, {errors} frame errors, 0 crashes")
    return 0


if __name__ == "__main__":
    sys.exit(main())
