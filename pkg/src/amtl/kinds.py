"""Enumerations used by several modules."""

import enum


class LossKind(str, enum.Enum):
    SQUARED = "squared"
    LOGISTIC = "logistic"


class Regularizer(str, enum.Enum):
    NUCLEAR = "nuclear"
    L21 = "l21"


class Mode(str, enum.Enum):
    AMTL = "amtl"
    SMTL = "smtl"


class Clock(str, enum.Enum):
    VIRTUAL = "virtual"
    REAL = "real"
