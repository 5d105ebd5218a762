"""Bibliometric decision support for national research assessment submissions.

Pipeline: load and reconcile the publication census (:mod:`selecta.corpus`),
score every publication against national sector cohorts
(:mod:`selecta.metrics`), group an institution's output into discipline pools
(:mod:`selecta.taxonomy`), run the recursive intersection selection under the
submission quotas (:mod:`selecta.selector`), and produce the diagnostic
tables (:mod:`selecta.reporting`). A FastAPI service
(:mod:`selecta.service`) exposes committee what-if sessions over HTTP and a
CLI (:mod:`selecta.cli`) drives batch runs.
"""

__version__ = "0.1.0"
