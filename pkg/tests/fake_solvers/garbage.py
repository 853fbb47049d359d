#!/usr/bin/env python3
"""Fake solver that consumes stdin and prints nonsense instead of a verdict."""
import sys

sys.stdin.read()
print("flurble blorp")
print("(this is not a verdict)")
