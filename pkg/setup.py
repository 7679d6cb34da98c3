"""wvlab package setup"""
from setuptools import setup

setup()
