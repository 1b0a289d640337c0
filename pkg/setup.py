from setuptools import find_packages, setup

setup(
    name="rq_rate_control",
    version="0.1.0",
    packages=find_packages(where="src"),
    package_dir={"": "src"},
    install_requires=[
        "numpy>=1.24.0",
        "scipy>=1.11.0",
        "pandas>=2.0.0",
        "pydantic>=2.5.0",
        "python-dotenv>=1.0.0",
        "loguru>=0.7.0",
        "scikit-learn>=1.3.0",
        "tqdm>=4.66.0",
    ],
    entry_points={"console_scripts": ["rq-rate-control=rq_rate_control.cli:main"]},
    python_requires=">=3.10",
)
