from setuptools import setup, find_namespace_packages

setup(
    name="sb-stirling",
    version="0.1.0",
    packages=find_namespace_packages(where="src"),
    package_dir={"": "src"},
    package_data={"sb_stirling.data": ["*.json", "*.tex"]},
    include_package_data=True,
    install_requires=[
        "gmpy2>=2.1.0",
        "python-dotenv>=0.19.0",
        "rich>=10.0.0"
    ],
    entry_points={
        "console_scripts": [
            "sb-stirling=sb_stirling.atlas_cli.cli:main"
        ]
    },
    python_requires=">=3.10",
    author="snadboy",
    description="2-adic partial Stirling functions: evaluation, zero atlases and verification",
    long_description=open("README.md").read(),
    long_description_content_type="text/markdown",
    url="https://github.com/snadboy/sb-stirling",
    classifiers=[
        "Development Status :: 4 - Beta",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
)
