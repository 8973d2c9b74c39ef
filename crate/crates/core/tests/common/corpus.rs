//! Malformed and well-formed replies against the menu `[fold, call, raise]`.

use genstrat_core::textio::ParsePath;

pub const OPTIONS: [&str; 3] = ["fold", "call", "raise"];

/// (reply, expected index or None for fallback, expected path)
pub const CORPUS: &[(&str, Option<usize>, ParsePath)] = {
    use ParsePath::*;
    &[
        ("{\"action\": 0}", Some(0), Strict),
        ("{\"action\": 1}", Some(1), Strict),
        ("{\"action\": 2}", Some(2), Strict),
        ("  {\"action\":2}\n", Some(2), Strict),
        ("{ \"action\" : 1 }", Some(1), Strict),
        ("{\"action\": 3}", None, Fallback),
        ("{\"action\": -1}", None, Fallback),
        ("{\"action\": 1.5}", None, Fallback),
        ("{\"action\": \"1\"}", Some(1), Lenient),
        ("{\"action\": \"call\"}", Some(1), Lenient),
        ("{\"action\": \"CALL\"}", Some(1), Lenient),
        ("{\"action\": \" raise \"}", Some(2), Lenient),
        ("{\"action\": \"check\"}", None, Fallback),
        ("{\"action\": 1, \"why\": \"pot odds\"}", Some(1), Lenient),
        ("{\"Action\": 0}", Some(0), Lenient),
        ("{\"move\": 1}", None, Fallback),
        ("I think folding is right. {\"action\": 0}", Some(0), Lenient),
        ("{\"action\": 0} wait, no: {\"action\": 2}", Some(2), Lenient),
        ("```json\n{\"action\": 1}\n```", Some(1), Lenient),
        ("Answer: {\"action\": \"fold\"}.", Some(0), Lenient),
        ("{\"reasoning\": {\"x\": 1}, \"action\": 2}", Some(2), Lenient),
        ("{\"action\": 1", Some(1), Lenient),
        ("{action: 2}", Some(2), Lenient),
        ("{'action': 'raise'}", Some(2), Lenient),
        ("action: call", Some(1), Lenient),
        ("action = 0", Some(0), Lenient),
        ("\"action\": \"fold\"", Some(0), Lenient),
        ("{\"action\": \"call", Some(1), Lenient),
        ("call", Some(1), Lenient),
        ("Raise", Some(2), Lenient),
        ("  fold  ", Some(0), Lenient),
        ("2", Some(2), Lenient),
        ("0\n", Some(0), Lenient),
        ("7", None, Fallback),
        ("Let me think.\nI'll call.\ncall", Some(1), Lenient),
        ("call.", Some(1), Lenient),
        ("raise!", Some(2), Lenient),
        ("", None, Fallback),
        ("   ", None, Fallback),
        ("{}", None, Fallback),
        ("[1]", None, Fallback),
        ("null", None, Fallback),
        ("{\"action\": null}", None, Fallback),
        ("{\"action\": [1]}", None, Fallback),
        ("I would like to call the bet.", None, Fallback),
        ("fold or call?", None, Fallback),
        ("}{", None, Fallback),
        ("{{{{", None, Fallback),
        ("\u{1F600}", None, Fallback),
        ("{\"action\": \"bet\"}", None, Fallback),
    ]
};

