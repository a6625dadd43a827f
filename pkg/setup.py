from setuptools import setup
import os

version_path = os.path.join(os.path.abspath(os.path.dirname(__file__)),
                            "aircombat", "ppomcts", "__init__.py")
with open(version_path) as fp:
    exec(fp.read())

setup(name='aircombat.ppomcts',
      version=str(__version__),
      packages=['aircombat.ppomcts'],
      description="Self play air combat agents trained with PPO and Monte Carlo tree search",
      install_requires=["six", "numpy", "scipy", "sympy"],
      extras_require={"test": ["pytest"]},
      entry_points={"console_scripts": ["ppomcts=aircombat.ppomcts.harness:main"]},
      include_package_data=True)
