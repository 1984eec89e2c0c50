//! Emoticon table. Western ASCII emoticons are matched as whole tokens; emoji
//! are recognized by code-point block.

pub const ASCII_EMOTICONS: &[&str] = &[
    ":)", ":-)", ":]", ":-]", ":(", ":-(", ":[", ":-[", ":D", ":-D", ";)", ";-)", ";D", ":P",
    ":-P", ":p", ":-p", ";P", ";p", ":o", ":O", ":-o", ":-O", ":'(", ":'-(", ":')", ":/", ":-/",
    ":\\", ":|", ":-|", ":*", ":-*", "<3", "</3", "XD", "xD", "X-D", "^_^", "^^", "-_-", "o_O",
    "O_o", "T_T", ";_;", "8)", "8-)", "B)", "B-)", ":$", ":@", ">:(", ">:)", "=)", "=(", "=D",
    "(:", "):", "D:",
];

/// Unicode blocks treated as emoji.
pub const EMOJI_RANGES: &[(u32, u32)] = &[
    (0x1F300, 0x1F5FF),
    (0x1F600, 0x1F64F),
    (0x1F680, 0x1F6FF),
    (0x1F900, 0x1F9FF),
    (0x1FA70, 0x1FAFF),
    (0x2600, 0x26FF),
    (0x2700, 0x27BF),
    (0xFE00, 0xFE0F),
    (0x1F1E6, 0x1F1FF),
];

pub fn is_emoji(c: char) -> bool {
    let cp = c as u32;
    EMOJI_RANGES.iter().any(|&(lo, hi)| (lo..=hi).contains(&cp))
}

/// Whole-token emoticon, or a token made only of emoji.
pub fn is_emoticon(token: &str) -> bool {
    ASCII_EMOTICONS.contains(&token) || (!token.is_empty() && token.chars().all(is_emoji))
}
