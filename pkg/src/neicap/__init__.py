"""neicap: construction-aware tooling for insufficient-evidence (NEI) evaluation data.

The package builds NEI evidence conditions from a corpus, audits their shortcut
surface, manages blinded human adjudication, and computes construction-stratified
metrics over externally produced prediction logs.
"""

__version__ = "0.1.0"
