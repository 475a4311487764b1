from setuptools import setup, find_packages

setup(
    name="anisoscale",
    version="0.1.0",
    license="LGPLv3",
    description="Anisotropic scaling limits of long-range dependent linear random fields on Z^3.",
    long_description=open("README.md").read(),
    long_description_content_type='text/markdown',
    classifiers=[
        "Development Status :: 3 - Alpha",
        "License :: OSI Approved :: GNU Lesser General Public License v3 (LGPLv3)",
        "Programming Language :: Python :: 3",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
    keywords="random fields long-range dependence scaling limits fractional brownian sheet",
    packages=find_packages('src'),
    package_dir={'':'src',},
    python_requires=">=3.7",
    install_requires=[
        "numpy",
        "scipy"
    ],
    entry_points={
        "console_scripts": [
            "anisoscale = anisoscale.cli:main",
        ]
    }
)
