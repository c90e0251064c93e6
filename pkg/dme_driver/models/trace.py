from sqlalchemy import Column, Float, Integer, String, Text
from sqlalchemy.orm import declarative_base

Base = declarative_base()


class LogicTrace(Base):
    __tablename__ = "logic_traces"

    id = Column(Integer, primary_key=True)
    run_id = Column(String, index=True)
    scene_id = Column(String, index=True)
    cue_mode = Column(String)  # ablation mode that chose the cues
    gaze = Column(Text)
    description = Column(Text)
    reasoning = Column(Text)
    decision = Column(Text)
    category = Column(String)


class PlannedTrajectory(Base):
    __tablename__ = "planned_trajectories"

    id = Column(Integer, primary_key=True)
    run_id = Column(String, index=True)
    scene_id = Column(String, index=True)
    waypoints = Column(Text)  # JSON list of [x, y]
    planned_category = Column(String)
    l2_avg = Column(Float)  # in meters
