"""默認配置文件"""
import os
from pathlib import Path

from dotenv import load_dotenv

load_dotenv()

# 項目根目錄
BASE_DIR = Path(__file__).resolve().parent.parent.parent

# 日誌配置
LOGGING = {
    "level": os.getenv("LOG_LEVEL", "INFO"),
    "directory": os.getenv("LOG_DIR") or None,
}

# 模擬編碼器配置
SIMULATION = {
    "q_num": int(os.getenv("RQ_Q_NUM", "64")),
    "lambda_min": float(os.getenv("RQ_LAMBDA_MIN", "85")),
    "lambda_max": float(os.getenv("RQ_LAMBDA_MAX", "840")),
    "n_frames": int(os.getenv("RQ_N_FRAMES", "96")),
    "gop_length": int(os.getenv("RQ_GOP_LENGTH", "32")),
    "ar_rho": 0.9,
    "noise_sigma": float(os.getenv("RQ_NOISE_SIGMA", "0.02")),
    "d0": 500.0,
    "decay_k": 0.07,
    "pixels": 1920 * 1080,
}

# 碼率控制配置
RATE_CONTROL = {
    "sliding_window": int(os.getenv("RQ_SLIDING_WINDOW", "40")),
    "minigop_len": 4,
    "weights": [1.9, 1.6, 1.3, 1.0],
    "lms_mu": 0.01,
    "lms_eta": 0.01,
    "observation_weight": 1.0,
    "min_bits": 1.0,
    "one_step_q_range": [10.0, 30.0],
    "initial_alpha": 12.0,
    "initial_beta": -100.0,
}

# 預測器配置
PREDICTOR = {
    "grid": [10.0, 17.0, 43.0, 60.0],
    "sigmas": [0.10, 0.10, 0.18, 0.20],
    "target_accuracy_pct": 16.87,
    "irls_max_iter": 500,
    "irls_tol": 1e-10,
    "irls_smoothing": 1e-8,
    "lbfgs_max_iter": 2000,
}

# 實驗配置
EXPERIMENT = {
    "anchor_levels": [10.0, 25.0, 40.0, 55.0],
    "output_dir": os.getenv("RQ_OUTPUT_DIR", str(BASE_DIR / "results")),
    "jobs": int(os.getenv("RQ_JOBS", "1")),
}
