#!/usr/bin/env python3
"""Fake solver that claims sat but returns an unreadable model."""
import sys

sys.stdin.read()
print("sat")
print("model parse me if you can")
