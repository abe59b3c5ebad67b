from setuptools import setup, find_packages

setup(
    name="latent-firing",
    version="0.1.0",
    description="Recuperação de fatores latentes com grafos de disparo amostrados",
    author="Firing Team",
    author_email="example@example.com",
    packages=find_packages(exclude=["tests", "tests_performance"]),
    py_modules=["main"],
    python_requires=">=3.8",
    install_requires=[
        "numpy>=1.20",
        "scipy>=1.7",
        "networkx>=2.6",
    ],
    entry_points={
        "console_scripts": [
            "firing=main:main",
        ],
    },
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
    ],
)
