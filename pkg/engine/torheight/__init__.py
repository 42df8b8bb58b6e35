"""Exact convex geometry for toric local heights and global heights of toric fibrations."""
