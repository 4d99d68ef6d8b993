import LD_Algebra_Lab

# Call the app entry point in the package
LD_Algebra_Lab.startLabCLI()
