import os
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

LOG_LEVEL = os.getenv("PHYSARUM_LOG_LEVEL", "INFO")
OUT_DIR = os.getenv("PHYSARUM_OUT_DIR", "runs")

# Integration defaults
METHOD = os.getenv("PHYSARUM_METHOD", "rk4")
INITIAL_STEP = float(os.getenv("PHYSARUM_INITIAL_STEP", "1e-2"))
MAX_TIME = float(os.getenv("PHYSARUM_MAX_TIME", "30"))
TRACE_INTERVAL = float(os.getenv("PHYSARUM_TRACE_INTERVAL", "0.1"))
RTOL = float(os.getenv("PHYSARUM_RTOL", "1e-6"))

EPS = float(os.getenv("PHYSARUM_EPS", "0.1"))
JOBS = int(os.getenv("PHYSARUM_JOBS", "1"))
