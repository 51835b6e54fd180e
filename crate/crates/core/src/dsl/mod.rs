//! User-defined flux expressions: parsing, exact symbolic partial
//! derivatives, and evaluation.

mod expr;
mod parse;

pub use expr::{DomainError, FluxExpr, Func, Node, Var};
pub use parse::{parse, ParseError};

/// Evaluate `e` at `(x, u)`, reporting NaN-producing nodes.
pub fn evaluate(e: &FluxExpr, x: f64, u: f64) -> Result<f64, DomainError> {
    e.evaluate(x, u)
}

pub fn differentiate(e: &FluxExpr, var: Var) -> FluxExpr {
    e.differentiate(var)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn boxed(n: Node) -> Box<Node> {
        Box::new(n)
    }

    #[test]
    fn parses_burgers_tree() {
        let e = parse("u^2/2").unwrap();
        let expected = Node::Div(boxed(Node::Pow(boxed(Node::Var(Var::U)), 2)), boxed(Node::Const(2.0)));
        assert_eq!(e.root(), &expected);
    }

    #[test]
    fn modulated_expression_has_both_variables() {
        let e = parse("(1+0.5*sin(x))*u^2/2").unwrap();
        assert!(e.uses(Var::X));
        assert!(e.uses(Var::U));
        assert_eq!(e.evaluate(FRAC_PI_2, 2.0).unwrap(), 3.0);
    }

    #[test]
    fn dangling_operator_reports_offset() {
        let err = parse("u +").unwrap_err();
        assert_eq!(err.position, 3);
        assert!(err.expected.iter().any(|s| s == "number"));
        assert!(err.message.contains("operand"));
    }

    #[test]
    fn other_malformed_inputs() {
        assert_eq!(parse("(u").unwrap_err().position, 2);
        assert_eq!(parse("u^1.5").unwrap_err().position, 2);
        assert_eq!(parse("log(u)").unwrap_err().position, 0);
        assert_eq!(parse("u $ 2").unwrap_err().position, 2);
        assert_eq!(parse("u u").unwrap_err().position, 2);
        assert_eq!(parse("").unwrap_err().position, 0);
        assert_eq!(parse("sin u").unwrap_err().position, 4);
    }

    #[test]
    fn precedence_and_associativity() {
        let e = parse("-u^2").unwrap();
        assert_eq!(e.evaluate(0.0, 3.0).unwrap(), -9.0);
        let e = parse("8/4/2").unwrap();
        assert_eq!(e.evaluate(0.0, 0.0).unwrap(), 1.0);
        let e = parse("2 - 3 - 4").unwrap();
        assert_eq!(e.evaluate(0.0, 0.0).unwrap(), -5.0);
        let e = parse("u^-2").unwrap();
        assert_eq!(e.evaluate(0.0, 2.0).unwrap(), 0.25);
        let e = parse("1 + 2 * 3 ^ 2").unwrap();
        assert_eq!(e.evaluate(0.0, 0.0).unwrap(), 19.0);
        let e = parse("  1.5e1 *\tu ").unwrap();
        assert_eq!(e.evaluate(0.0, 2.0).unwrap(), 30.0);
    }

    #[test]
    fn evaluates_burgers() {
        assert_eq!(evaluate(&parse("u^2/2").unwrap(), 0.0, 3.0).unwrap(), 4.5);
    }

    #[test]
    fn sqrt_of_negative_is_domain_error() {
        let e = parse("sqrt(u)").unwrap();
        let err = e.evaluate(0.0, -1.0).unwrap_err();
        assert_eq!(err.node, 0);
        assert_eq!(err.op, "sqrt");
        let e = parse("1 + sqrt(u)").unwrap();
        assert_eq!(e.evaluate(0.0, -1.0).unwrap_err().node, 2);
    }

    #[test]
    fn derivative_of_burgers_is_u() {
        let d = differentiate(&parse("u^2/2").unwrap(), Var::U);
        for u in [-2.0, 0.0, 0.3, 5.0] {
            assert_eq!(d.eval(1.0, u), u);
        }
    }

    #[test]
    fn x_derivative_of_modulated_burgers() {
        let d = differentiate(&parse("(1+0.5*sin(x))*u^2/2").unwrap(), Var::X);
        for &(x, u) in &[(0.0, 1.0), (1.3, -0.7), (-2.0, 2.0)] {
            let expected = 0.5 * f64::cos(x) * u * u / 2.0;
            assert!((d.eval(x, u) - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn derivative_of_unrelated_variable_folds_to_zero() {
        let d = differentiate(&parse("sin(x)").unwrap(), Var::U);
        assert_eq!(d.root(), &Node::Const(0.0));
    }

    const CORPUS: &[&str] = &[
        "u^2/2",
        "(1+0.5*sin(x))*u^2/2",
        "exp(0.1*x)*u^2/2 + u^4/12",
        "(2+tanh(x))*u^2/2",
        "u^2/(2 + cos(x))",
        "sqrt(1 + u^2) - 1",
        "-(-u)^3/6 + u^2 + x*x*u^2/10",
        "(1 + x^2)^-1*u^2 + u^2",
    ];

    fn central_fd(e: &FluxExpr, var: Var, x: f64, u: f64) -> f64 {
        let h = 1e-5;
        match var {
            Var::U => (e.eval(x, u + h) - e.eval(x, u - h)) / (2.0 * h),
            Var::X => (e.eval(x + h, u) - e.eval(x - h, u)) / (2.0 * h),
        }
    }

    proptest! {
        #[test]
        fn derivatives_match_central_differences(x in -2.0f64..2.0, u in -2.0f64..2.0) {
            for src in CORPUS {
                let e = parse(src).unwrap();
                for var in [Var::U, Var::X] {
                    let d = e.differentiate(var);
                    let fd = central_fd(&e, var, x, u);
                    prop_assert!((d.eval(x, u) - fd).abs() <= 1e-6, "{src} d/{:?} at ({x},{u})", var);
                }
            }
        }

        #[test]
        fn display_reparses_to_identical_evaluation(x in -3.0f64..3.0, u in -3.0f64..3.0) {
            for src in CORPUS {
                let e = parse(src).unwrap();
                let again = parse(&e.to_string()).unwrap();
                prop_assert_eq!(e.eval(x, u).to_bits(), again.eval(x, u).to_bits());
                let d = e.differentiate(Var::U).differentiate(Var::X);
                let d_again = parse(&d.to_string()).unwrap();
                prop_assert_eq!(d.eval(x, u).to_bits(), d_again.eval(x, u).to_bits());
            }
        }
    }
}
