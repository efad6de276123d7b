"""Target-orbit kinematics and the chaser's linearized relative dynamics."""
