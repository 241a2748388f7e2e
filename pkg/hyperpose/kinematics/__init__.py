from hyperpose.kinematics.skeleton import Skeleton, load_skeleton  # noqa: F401
