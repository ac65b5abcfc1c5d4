"""Multi-task active learning for conversational semantic role labeling.

A numpy implementation of a joint role-labeling + entity-recognition
tagger (char-CNN + word embeddings + highway BiLSTM + CRF/softmax heads),
pool-based uncertainty sampling strategies over both task heads, span-level
evaluation, and a small annotation service that drives the loop over HTTP.
"""

__version__ = "0.1.0"
