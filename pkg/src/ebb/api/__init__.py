from .store import Case, CaseStore, CaseStoreError
from .app import build_app

__all__ = ["Case", "CaseStore", "CaseStoreError", "build_app"]
