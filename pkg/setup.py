from setuptools import setup, find_packages

setup(
    name="isurv",
    version="0.1.0",
    description="Attention-based survival models trained on interval-valued (imprecise) censored labels",
    author="isurv developers",
    license="MIT",
    packages=[
        "isurv",
    ],
    install_requires=[
        "numpy",
        "scipy",
        "torch",
        "pandas",
        "scikit-learn>=1.2",
        "joblib",
    ],
    entry_points={
        "console_scripts": ["isurv=isurv.cli:main"],
    },
    zip_safe=False,
)
