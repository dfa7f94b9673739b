"""Offline comparison of diversifying re-rankers with Sudden Death scoring."""

__version__ = "0.1.0"
