"""Hand-built CSP for the vehicle-control example, kept character-faithful
to its original constraint program, quirks included:

- strict `>` between the root and its mandatory children;
- the feedback sum lower bound is unguarded, so Feedback is forced on;
- `ResponseTime` (not ResponseTimeCheck) appears only in two inequalities
  and gets the solver's default domain, here [0..2^28-1] to match the
  classic default upper bound of the original system;
- the equivalence ties a missing speed sensor to mandatory vibration.

`reduced=True` shrinks both occurrence-count blocks to [0..3] so exhaustive
counting is tractable; ResponseTime is pinned to [0..3] too, which preserves
the solution set because 0 <= ResponseTime <= SensorAutoTest <= 3 already.
"""

from featline.fd import (
    Atom,
    Cmp,
    Const,
    Iff,
    IntervalSet,
    Reified,
    Store,
    Var,
    sum_of,
)

DEFAULT_MAX = 2 ** 28 - 1

SENSOR_SIDE = ("Sensor", "SpeedSensor", "PositionSensor", "SensorAutoTest",
               "ConsistencyCheck", "ResponseTimeCheck",
               "SensorFunctionalityCheck")
ACTUATOR_SIDE = ("Actuator", "PositionActuator", "ActuatorAutoTest",
                 "MemoryCheck", "ActuatorFunctionalityCheck")


def build(reduced: bool = False):
    """Returns (store, name -> VarRef). 21 variables: the 19 distinct named
    ones, ResponseTime, and the truth var backing the equivalence."""
    s = Store()
    names = {}

    def var(name, dom):
        names[name] = s.new_var(dom, name)
        return names[name]

    sensor_hi = 3 if reduced else 4
    actuator_hi = 3 if reduced else 100
    rt_hi = 3 if reduced else DEFAULT_MAX

    var("VMC", (0, 1))
    var("Sensor", (0, sensor_hi))
    var("Actuator", (0, actuator_hi))
    var("Processor", (0, 1))
    var("Feedback", (0, 1))
    var("SpeedSensor", (0, sensor_hi))
    var("SensorAutoTest", (0, sensor_hi))
    var("PositionSensor", (0, sensor_hi))
    var("PositionActuator", (0, actuator_hi))
    var("ActuatorAutoTest", (0, actuator_hi))
    var("InternalMemory", IntervalSet.from_values([32, 64, 256, 512, 1024]))
    var("ConsistencyCheck", (0, sensor_hi))
    var("ResponseTimeCheck", (0, sensor_hi))
    var("SensorFunctionalityCheck", (0, sensor_hi))
    var("MemoryCheck", (0, actuator_hi))
    var("ActuatorFunctionalityCheck", (0, actuator_hi))
    var("Visual", (0, 1))
    var("Audio", (0, 1))
    var("Vibration", (0, 1))
    var("ResponseTime", (0, rt_hi))
    truth = var("true", (1, 1))

    def v(name):
        return Var(names[name])

    def post(c, label):
        s.post(c, label)

    post(Cmp(v("Sensor"), ">", v("VMC")), "Sensor > VMC")
    post(Cmp(v("Actuator"), ">", v("VMC")), "Actuator > VMC")
    post(Cmp(v("Processor"), ">", v("VMC")), "Processor > VMC")
    post(Cmp(v("PositionSensor"), "=", v("Sensor")), "PositionSensor = Sensor")
    post(Cmp(v("SpeedSensor"), "<=", v("Sensor")), "SpeedSensor <= Sensor")
    post(Cmp(v("SensorAutoTest"), "<=", v("Sensor")), "SensorAutoTest <= Sensor")
    post(Cmp(v("SensorFunctionalityCheck"), "=", v("SensorAutoTest")),
         "SensorFunctionalityCheck = SensorAutoTest")
    post(Cmp(v("ConsistencyCheck"), "<=", v("SensorAutoTest")),
         "ConsistencyCheck <= SensorAutoTest")
    post(Cmp(v("ResponseTime"), "<=", v("SensorAutoTest")),
         "ResponseTime <= SensorAutoTest")
    post(Cmp(v("ResponseTime"), "<=", v("ConsistencyCheck")),
         "ResponseTime <= ConsistencyCheck")
    post(Cmp(v("Visual"), "<=", v("Feedback")), "Visual <= Feedback")
    post(Cmp(v("Audio"), "<=", v("Feedback")), "Audio <= Feedback")
    post(Cmp(v("Vibration"), "<=", v("Feedback")), "Vibration <= Feedback")
    feedback_sum = sum_of([names["Visual"], names["Audio"], names["Vibration"]])
    post(Cmp(feedback_sum, ">=", Const(1)),
         "Visual + Audio + Vibration >= 1")
    post(Cmp(feedback_sum, "<=", Const(2)),
         "Visual + Audio + Vibration <= 2")
    post(Cmp(v("PositionActuator"), "=", v("Actuator")),
         "PositionActuator = Actuator")
    post(Cmp(v("ActuatorAutoTest"), "<=", v("Actuator")),
         "ActuatorAutoTest <= Actuator")
    post(Cmp(v("MemoryCheck"), "<=", v("ActuatorAutoTest")),
         "MemoryCheck <= ActuatorAutoTest")
    post(Cmp(v("ActuatorFunctionalityCheck"), "=", v("ActuatorAutoTest")),
         "ActuatorFunctionalityCheck = ActuatorAutoTest")
    post(Reified(truth, Iff(Atom(Cmp(v("SpeedSensor"), "!=", Const(0))),
                            Atom(Cmp(v("Vibration"), "=", Const(0))))),
         "SpeedSensor != 0 <=> Vibration = 0")
    return s, names
