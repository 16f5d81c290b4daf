"""Real-time teleoperation solvers: hand retargeting with loop-joint
reduction, unified arm IK with collision and singularity avoidance,
tactile-to-PWM haptics, and a bimanual session/replay harness."""

__version__ = "0.1.0"
