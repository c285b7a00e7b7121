"""Topic discovery toolkit for scientific-abstract corpora.

Pipeline: corpus ingestion -> text preprocessing -> document embeddings ->
UMAP reduction -> HDBSCAN clustering -> class-based TF-IDF topic
representations, plus topic-quality metrics and post-fit analytics.
"""

__version__ = "0.1.0"
