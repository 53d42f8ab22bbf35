"""Published macro-F1 values for the 20 Newsgroups experiments.

These are reference numbers reported for a human annotator (and for baselines
this package does not implement). They are never computed here.
"""

DATASETS = ("pc-mac", "med-space", "politics-sci", "politics-rel")

# method -> dataset -> macro-F1
BASELINES = {
    "TLC": {"pc-mac": 0.68, "med-space": 0.943, "politics-sci": 0.911, "politics-rel": 0.922},
    "ClassifyLDA": {"pc-mac": 0.641, "med-space": 0.926, "politics-sci": 0.899, "politics-rel": 0.892},
    "NB-EM": {"pc-mac": 0.429, "med-space": 0.99, "politics-sci": 0.474, "politics-rel": 0.466},
    "GE-FL": {"pc-mac": 0.666, "med-space": 0.939, "politics-sci": 0.618, "politics-rel": 0.765},
    "OnlyLPA (K=1)": {"pc-mac": 0.486, "med-space": 0.919, "politics-sci": 0.539, "politics-rel": 0.559},
    "OnlyLPA (K=3)": {"pc-mac": 0.374, "med-space": 0.953, "politics-sci": 0.601, "politics-rel": 0.657},
}

# (method, K, tau) -> dataset -> macro-F1
LPA_TD = {
    ("LPA-TD", 1, 0.1): {"pc-mac": 0.673, "med-space": 0.947, "politics-sci": 0.912, "politics-rel": 0.837},
    ("LPA-TD", 1, 0.05): {"pc-mac": 0.682, "med-space": 0.949, "politics-sci": 0.912, "politics-rel": 0.836},
    ("LPA-TD", 1, 0.01): {"pc-mac": 0.704, "med-space": 0.951, "politics-sci": 0.887, "politics-rel": 0.819},
    ("LPA-TD", 3, 0.2): {"pc-mac": 0.661, "med-space": 0.948, "politics-sci": 0.918, "politics-rel": 0.840},
    ("LPA-TD", 3, 0.1): {"pc-mac": 0.673, "med-space": 0.950, "politics-sci": 0.916, "politics-rel": 0.839},
    ("LPA-TD", 3, 0.05): {"pc-mac": 0.671, "med-space": 0.949, "politics-sci": 0.903, "politics-rel": 0.823},
    ("LPA-TD-Coh", 1, 0.1): {"pc-mac": 0.686, "med-space": 0.945, "politics-sci": 0.92, "politics-rel": 0.852},
    ("LPA-TD-Coh", 1, 0.05): {"pc-mac": 0.696, "med-space": 0.950, "politics-sci": 0.918, "politics-rel": 0.854},
    ("LPA-TD-Coh", 1, 0.01): {"pc-mac": 0.719, "med-space": 0.954, "politics-sci": 0.887, "politics-rel": 0.849},
    ("LPA-TD-Coh", 3, 0.2): {"pc-mac": 0.671, "med-space": 0.945, "politics-sci": 0.904, "politics-rel": 0.858},
    ("LPA-TD-Coh", 3, 0.1): {"pc-mac": 0.681, "med-space": 0.951, "politics-sci": 0.925, "politics-rel": 0.860},
    ("LPA-TD-Coh", 3, 0.05): {"pc-mac": 0.674, "med-space": 0.953, "politics-sci": 0.918, "politics-rel": 0.853},
}
