"""Regenerate data/cartpole_domain.pddl (the acceleration terms are long)."""
from pathlib import Path

M = "(+ (m_pole) (m_cart))"


def accels(plane: str, force: str) -> tuple[str, str]:
    sin = f"(sin (theta_{plane}))"
    cos = f"(cos (theta_{plane}))"
    temp = f"(/ (+ {force} (* (* (* (m_pole) (l_pole)) (* (theta_{plane}_dot) (theta_{plane}_dot))) {sin})) {M})"
    thacc = (f"(/ (- (* (gravity) {sin}) (* {cos} {temp})) "
             f"(* (l_pole) (- 1.3333333333333333 (/ (* (m_pole) (* {cos} {cos})) {M}))))")
    xacc = f"(- {temp} (/ (* (* (* (m_pole) (l_pole)) {thacc}) {cos}) {M}))"
    return xacc, thacc


def assigns(plane: str, force: str) -> str:
    xacc, thacc = accels(plane, force)
    return (f"      (assign (cart_{plane}_ddot) {xacc})\n"
            f"      (assign (theta_{plane}_ddot) {thacc})\n")


PUSH = {
    "push_left": ("x", "(- (/ (* (force_mag) (push_force_l)) 10))"),
    "push_right": ("x", "(/ (* (force_mag) (push_force_r)) 10)"),
    "push_back": ("y", "(- (/ (* (force_mag) (push_force_b)) 10))"),
    "push_fwd": ("y", "(/ (* (force_mag) (push_force_f)) 10)"),
}

out = [""";; Two decoupled planar cart-poles sharing one cart (x plane and y plane).
;; Accelerations are recomputed by the actions (with the push force) or by the
;; update_accel event (no force) and integrated by the movement process.
(define (domain cartpole)
  (:requirements :typing :fluents :time)
  (:predicates (ready) (total_failure))
  (:functions
    (cart_x) (cart_x_dot) (cart_x_ddot) (theta_x) (theta_x_dot) (theta_x_ddot)
    (cart_y) (cart_y_dot) (cart_y_ddot) (theta_y) (theta_y_dot) (theta_y_ddot)
    (elapsed_time) (elapsed_steps) (accel_time) (step_time)
    (l_pole) (m_pole) (m_cart) (force_mag) (gravity) (angle_limit)
    (push_force_l) (push_force_r) (push_force_f) (push_force_b)
    (pole_vel_x) (pole_vel_y) (cart_vel_x) (cart_vel_y))
"""]
for name, (plane, force) in PUSH.items():
    other = "y" if plane == "x" else "x"
    out.append(f"""
  (:action {name}
    :parameters ()
    :precondition (and (ready) (not (total_failure)))
    :effect (and
{assigns(plane, force)}{assigns(other, "0")}      (assign (accel_time) (elapsed_time))))
""")
out.append(f"""
  (:event update_accel
    :parameters ()
    :precondition (and (< (accel_time) (elapsed_time)))
    :effect (and
{assigns("x", "0")}{assigns("y", "0")}      (assign (accel_time) (elapsed_time))))

  (:event count_step
    :parameters ()
    :precondition (and (< (step_time) (elapsed_time)))
    :effect (and (increase (elapsed_steps) 1) (assign (step_time) (elapsed_time))))
""")
for plane in "xy":
    out.append(f"""
  (:event pole_falls_{plane}_pos
    :parameters ()
    :precondition (and (not (total_failure)) (>= (theta_{plane}) (angle_limit)))
    :effect (and (total_failure)))

  (:event pole_falls_{plane}_neg
    :parameters ()
    :precondition (and (not (total_failure)) (<= (theta_{plane}) (- (angle_limit))))
    :effect (and (total_failure)))
""")
out.append("""
  (:process movement
    :parameters ()
    :precondition (and (ready) (not (total_failure)))
    :effect (and
      (increase (cart_x) (* #t (* (cart_vel_x) (cart_x_dot))))
      (increase (theta_x) (* #t (* (pole_vel_x) (theta_x_dot))))
      (increase (cart_x_dot) (* #t (cart_x_ddot)))
      (increase (theta_x_dot) (* #t (theta_x_ddot)))
      (increase (cart_y) (* #t (* (cart_vel_y) (cart_y_dot))))
      (increase (theta_y) (* #t (* (pole_vel_y) (theta_y_dot))))
      (increase (cart_y_dot) (* #t (cart_y_ddot)))
      (increase (theta_y_dot) (* #t (theta_y_ddot)))
      (increase (elapsed_time) (* #t 1))))
)
""")
Path(__file__).resolve().parents[1].joinpath("src/adaptplan/data/cartpole_domain.pddl").write_text("".join(out))
