import os

OUTPUT_DIR = os.environ.get("PSEUDOLAP_OUTPUT_DIR", "pseudolap_out")
WORKERS = int(os.environ.get("PSEUDOLAP_WORKERS", "1"))
if WORKERS < 1:
    WORKERS = 1
