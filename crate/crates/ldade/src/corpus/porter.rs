//! Porter's 1980 suffix-stripping stemmer, implemented from the original
//! rule tables (steps 1a through 5b, longest-match-first within a step).

/// Stem a single token with the classic Porter algorithm.
///
/// The token is lowercased first. Tokens shorter than three characters or
/// containing anything other than ASCII letters are returned unchanged.
pub fn stem(token: &str) -> String {
    if token.len() <= 2 || !token.bytes().all(|b| b.is_ascii_alphabetic()) {
        return token.to_string();
    }
    let mut w = Word { b: token.to_ascii_lowercase().into_bytes(), j: 0 };
    w.step1a();
    w.step1b();
    w.step1c();
    w.step2();
    w.step3();
    w.step4();
    w.step5();
    String::from_utf8(w.b).expect("buffer stays ASCII")
}

/// Working buffer: `b` is the current word (lowercase ASCII), `j` the stem
/// length recorded by the most recent successful suffix match.
struct Word {
    b: Vec<u8>,
    j: usize,
}

impl Word {
    fn len(&self) -> usize {
        self.b.len()
    }

    /// A letter is a consonant unless it is a/e/i/o/u, or a y preceded by a
    /// consonant.
    fn is_cons(&self, i: usize) -> bool {
        match self.b[i] {
            b'a' | b'e' | b'i' | b'o' | b'u' => false,
            b'y' => i == 0 || !self.is_cons(i - 1),
            _ => true,
        }
    }

    /// The measure m of `b[..end]`: the number of vowel-consonant sequences
    /// in the form [C](VC)^m[V].
    fn measure(&self, end: usize) -> usize {
        let mut m = 0;
        let mut i = 0;
        while i < end && self.is_cons(i) {
            i += 1;
        }
        loop {
            while i < end && !self.is_cons(i) {
                i += 1;
            }
            if i == end {
                return m;
            }
            while i < end && self.is_cons(i) {
                i += 1;
            }
            m += 1;
        }
    }

    fn has_vowel(&self, end: usize) -> bool {
        (0..end).any(|i| !self.is_cons(i))
    }

    /// `b[..end]` ends in a double consonant.
    fn double_cons(&self, end: usize) -> bool {
        end >= 2 && self.b[end - 1] == self.b[end - 2] && self.is_cons(end - 1)
    }

    /// `b[..end]` ends consonant-vowel-consonant where the final consonant
    /// is not w, x or y.
    fn ends_cvc(&self, end: usize) -> bool {
        end >= 3
            && self.is_cons(end - 1)
            && !self.is_cons(end - 2)
            && self.is_cons(end - 3)
            && !matches!(self.b[end - 1], b'w' | b'x' | b'y')
    }

    /// If the word ends with `s`, record the stem length in `j`.
    fn ends(&mut self, s: &[u8]) -> bool {
        if self.b.ends_with(s) {
            self.j = self.b.len() - s.len();
            true
        } else {
            false
        }
    }

    /// Replace the matched suffix (everything past `j`) with `s`.
    fn set_to(&mut self, s: &[u8]) {
        self.b.truncate(self.j);
        self.b.extend_from_slice(s);
    }

    /// Apply `set_to` only when the stem has positive measure.
    fn replace(&mut self, s: &[u8]) {
        if self.measure(self.j) > 0 {
            self.set_to(s);
        }
    }

    // SSES -> SS, IES -> I, SS -> SS, S -> ""
    fn step1a(&mut self) {
        if self.b.ends_with(b"s") {
            if self.ends(b"sses") {
                self.set_to(b"ss");
            } else if self.ends(b"ies") {
                self.set_to(b"i");
            } else if !self.b.ends_with(b"ss") && self.ends(b"s") {
                self.set_to(b"");
            }
        }
    }

    // (m>0) EED -> EE; (*v*) ED -> ""; (*v*) ING -> ""; then tidy the stem.
    fn step1b(&mut self) {
        if self.ends(b"eed") {
            if self.measure(self.j) > 0 {
                self.set_to(b"ee");
            }
            return;
        }
        let stripped = (self.ends(b"ed") && self.has_vowel(self.j))
            || (self.ends(b"ing") && self.has_vowel(self.j));
        if !stripped {
            return;
        }
        self.set_to(b"");
        let end = self.len();
        if self.b.ends_with(b"at") || self.b.ends_with(b"bl") || self.b.ends_with(b"iz") {
            self.b.push(b'e');
        } else if self.double_cons(end) {
            if !matches!(self.b[end - 1], b'l' | b's' | b'z') {
                self.b.pop();
            }
        } else if self.measure(end) == 1 && self.ends_cvc(end) {
            self.b.push(b'e');
        }
    }

    // (*v*) Y -> I
    fn step1c(&mut self) {
        if self.ends(b"y") && self.has_vowel(self.j) {
            let end = self.len();
            self.b[end - 1] = b'i';
        }
    }

    // (m>0) double-suffix normalizations; longest matching suffix wins and
    // ends the step whether or not the measure condition passes.
    fn step2(&mut self) {
        const RULES: &[(&[u8], &[u8])] = &[
            (b"ational", b"ate"),
            (b"ization", b"ize"),
            (b"iveness", b"ive"),
            (b"fulness", b"ful"),
            (b"ousness", b"ous"),
            (b"tional", b"tion"),
            (b"biliti", b"ble"),
            (b"entli", b"ent"),
            (b"ousli", b"ous"),
            (b"ation", b"ate"),
            (b"alism", b"al"),
            (b"aliti", b"al"),
            (b"iviti", b"ive"),
            (b"enci", b"ence"),
            (b"anci", b"ance"),
            (b"izer", b"ize"),
            (b"abli", b"able"),
            (b"alli", b"al"),
            (b"ator", b"ate"),
            (b"eli", b"e"),
        ];
        for &(s1, s2) in RULES {
            if self.ends(s1) {
                self.replace(s2);
                return;
            }
        }
    }

    // (m>0) -icate/-ative/-alize/-iciti/-ical/-ful/-ness
    fn step3(&mut self) {
        const RULES: &[(&[u8], &[u8])] = &[
            (b"icate", b"ic"),
            (b"ative", b""),
            (b"alize", b"al"),
            (b"iciti", b"ic"),
            (b"ical", b"ic"),
            (b"ness", b""),
            (b"ful", b""),
        ];
        for &(s1, s2) in RULES {
            if self.ends(s1) {
                self.replace(s2);
                return;
            }
        }
    }

    // (m>1) drop the suffix; ION additionally requires the stem to end in
    // s or t.
    fn step4(&mut self) {
        const RULES: &[&[u8]] = &[
            b"ement", b"ance", b"ence", b"able", b"ible", b"ment", b"ent", b"ant", b"ion",
            b"ism", b"ate", b"iti", b"ous", b"ive", b"ize", b"al", b"er", b"ic", b"ou",
        ];
        for &s in RULES {
            if self.ends(s) {
                if s == b"ion" && !(self.j > 0 && matches!(self.b[self.j - 1], b's' | b't')) {
                    return;
                }
                if self.measure(self.j) > 1 {
                    self.set_to(b"");
                }
                return;
            }
        }
    }

    // 5a: drop a final E when m>1, or when m=1 and the stem is not *o.
    // 5b: (m>1, *d, *L) single final L.
    fn step5(&mut self) {
        let end = self.len();
        if self.b[end - 1] == b'e' {
            let m = self.measure(end);
            if m > 1 || (m == 1 && !self.ends_cvc(end - 1)) {
                self.b.pop();
            }
        }
        let end = self.len();
        if self.b[end - 1] == b'l' && self.double_cons(end) && self.measure(end) > 1 {
            self.b.pop();
        }
    }
}
