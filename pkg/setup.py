from setuptools import setup, find_packages
import os

# Read the contents of your README file
this_directory = os.path.abspath(os.path.dirname(__file__))
with open(os.path.join(this_directory, "README.md"), encoding="utf-8") as f:
    long_description = f.read()

setup(
    name="gtseg",
    version="0.1.0",
    description="GT U-Net medical image segmentation with a Fourier-descriptor shape loss, on a numpy tensor engine.",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=find_packages(include=["gtseg", "gtseg.*"]),
    install_requires=[
        "numpy",
        "scipy",
        "pandas",
        "pydantic>=2",
    ],
    extras_require={
        "experiments": ["matplotlib"],
    },
    entry_points={
        "console_scripts": ["gtseg=gtseg.cli:main"],
    },
    classifiers=[
        "Programming Language :: Python :: 3",
        "Operating System :: OS Independent",
    ],
    python_requires=">=3.9",
)
