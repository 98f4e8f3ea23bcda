"""Evaluation harness for category-conditioned sound synthesis challenges.

The pipeline: preprocess submissions to the 4 s / 22,050 Hz clip contract,
embed clips, screen systems by per-category Fréchet Audio Distance, pick 20
representative medoid sounds per finalist and category, generate anchored
listening-test sessions, serve them over HTTP, then ingest, filter and
aggregate ratings into a weighted final ranking with correlation reports.
"""

__version__ = "0.1.0"
