from .LD_Algebra_Lab import run, startLabCLI
