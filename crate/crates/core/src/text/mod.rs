//! Post preprocessing, per-user documents, document embeddings, pretrained
//! word vectors and the logistic-regression head.

pub mod doc2vec;
mod emoticons;
pub mod io;
pub mod logistic;
pub mod pretrained;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use doc2vec::{infer_doc_vector, train_doc2vec, Doc2vecModel, Doc2vecParams};
pub use logistic::{predict_logistic, train_logistic, LogisticModel, LogisticParams};
pub use pretrained::{load_word_embeddings, mean_pool, WordVectors};

/// One post as ingested from JSONL.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawPost {
    pub user: String,
    pub ts: i64,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Post {
    /// UTC seconds.
    pub ts: i64,
    pub text: String,
    /// Lowercased hashtags without the leading `#`.
    pub hashtags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserPosts {
    pub user: String,
    pub posts: Vec<Post>,
}

/// Posts grouped per user, users sorted by id, posts sorted by timestamp.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct UserCorpus {
    users: Vec<UserPosts>,
}

impl UserCorpus {
    pub fn from_posts(posts: impl IntoIterator<Item = RawPost>) -> Self {
        let mut by_user: BTreeMap<String, Vec<Post>> = BTreeMap::new();
        for p in posts {
            let hashtags = extract_hashtags(&p.text);
            by_user.entry(p.user).or_default().push(Post {
                ts: p.ts,
                text: p.text,
                hashtags,
            });
        }
        let users = by_user
            .into_iter()
            .map(|(user, mut posts)| {
                posts.sort_by_key(|p| p.ts);
                UserPosts { user, posts }
            })
            .collect();
        Self { users }
    }

    /// Adds users that have no posts so that every graph node has an entry.
    pub fn with_users<'a>(mut self, users: impl IntoIterator<Item = &'a str>) -> Self {
        let mut known: BTreeMap<String, Vec<Post>> = self
            .users
            .drain(..)
            .map(|u| (u.user, u.posts))
            .collect();
        for u in users {
            known.entry(u.to_owned()).or_default();
        }
        self.users = known
            .into_iter()
            .map(|(user, posts)| UserPosts { user, posts })
            .collect();
        self
    }

    pub fn users(&self) -> &[UserPosts] {
        &self.users
    }

    pub fn get(&self, user: &str) -> Option<&UserPosts> {
        self.users
            .binary_search_by(|u| u.user.as_str().cmp(user))
            .ok()
            .map(|i| &self.users[i])
    }

    pub fn num_posts(&self) -> usize {
        self.users.iter().map(|u| u.posts.len()).sum()
    }

    /// Flattens back to raw posts, ordered by user then timestamp.
    pub fn raw_posts(&self) -> Vec<RawPost> {
        self.users
            .iter()
            .flat_map(|u| {
                u.posts.iter().map(move |p| RawPost {
                    user: u.user.clone(),
                    ts: p.ts,
                    text: p.text.clone(),
                })
            })
            .collect()
    }
}

/// What the preprocessor does with `#hashtag` tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    /// Drop hashtags along with URLs, mentions and emoticons.
    Classifier,
    /// Keep hashtag bodies (without `#`) as tokens.
    KeepHashtags,
}

fn is_url(token: &str) -> bool {
    let lower = token.to_lowercase();
    lower.starts_with("http://")
        || lower.starts_with("https://")
        || lower.starts_with("www.")
        || lower.contains("://")
}

fn clean_pieces(token: &str, out: &mut Vec<String>) {
    let lower = token.to_lowercase();
    let mapped: String = lower
        .chars()
        .map(|c| {
            if (c.is_alphanumeric() && !emoticons::is_emoji(c)) || c == '\'' || c == '-' {
                c
            } else {
                ' '
            }
        })
        .collect();
    for piece in mapped.split_whitespace() {
        let piece = piece.trim_matches(|c| c == '-' || c == '\'');
        if !piece.is_empty() {
            out.push(piece.to_owned());
        }
    }
}

/// Tokenizes a post: removes URLs, mentions, hashtags (per profile),
/// emoticons, emoji and stray characters, lowercases, and splits on
/// whitespace.
pub fn preprocess_with(text: &str, profile: Profile) -> Vec<String> {
    let mut out = Vec::new();
    for token in text.split_whitespace() {
        if is_url(token) || token.starts_with('@') || emoticons::is_emoticon(token) {
            continue;
        }
        if let Some(body) = token.strip_prefix('#') {
            if profile == Profile::KeepHashtags {
                clean_pieces(body, &mut out);
            }
            continue;
        }
        clean_pieces(token, &mut out);
    }
    out
}

/// Classifier preprocessing (hashtags removed).
pub fn preprocess(text: &str) -> Vec<String> {
    preprocess_with(text, Profile::Classifier)
}

/// Lowercased hashtag bodies found in `text`.
pub fn extract_hashtags(text: &str) -> Vec<String> {
    text.split_whitespace()
        .filter_map(|t| t.strip_prefix('#'))
        .filter_map(|body| {
            let tag: String = body
                .chars()
                .take_while(|c| c.is_alphanumeric() || *c == '_')
                .collect::<String>()
                .to_lowercase();
            (!tag.is_empty()).then_some(tag)
        })
        .collect()
}

/// A user's posts as one token sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserDocument {
    pub user: String,
    pub tokens: Vec<String>,
}

impl UserDocument {
    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Concatenates each user's preprocessed posts in timestamp order. Users with
/// no surviving tokens get an empty document and a warning.
pub fn build_documents(corpus: &UserCorpus) -> Vec<UserDocument> {
    corpus
        .users()
        .iter()
        .map(|u| {
            let tokens: Vec<String> = u.posts.iter().flat_map(|p| preprocess(&p.text)).collect();
            if tokens.is_empty() {
                log::warn!("user {} has an empty document", u.user);
            }
            UserDocument {
                user: u.user.clone(),
                tokens,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn strips_urls_mentions_hashtags_emoticons() {
        assert_eq!(
            preprocess("Check https://x.y @bob #maga :) now"),
            vec!["check", "now"]
        );
    }

    #[test]
    fn empty_text() {
        assert!(preprocess("").is_empty());
    }

    #[test]
    fn lowercases() {
        assert_eq!(preprocess("HeLLo WoRLD"), vec!["hello", "world"]);
    }

    #[test]
    fn emoji_and_punctuation_removed() {
        assert_eq!(preprocess("great!!! \u{1F600} news, folks\u{7}"), vec!["great", "news", "folks"]);
        assert_eq!(preprocess("porch-monkey isn't"), vec!["porch-monkey", "isn't"]);
    }

    #[test]
    fn hashtag_profile_keeps_bodies() {
        assert_eq!(
            preprocess_with("rally #UniteTheRight today", Profile::KeepHashtags),
            vec!["rally", "unitetheright", "today"]
        );
        assert_eq!(extract_hashtags("x #BanIslam, #a_b #"), vec!["banislam", "a_b"]);
    }

    fn corpus(posts: &[(&str, i64, &str)]) -> UserCorpus {
        UserCorpus::from_posts(posts.iter().map(|&(u, ts, t)| RawPost {
            user: u.into(),
            ts,
            text: t.into(),
        }))
    }

    #[test]
    fn documents_concatenate_in_order() {
        let c = corpus(&[("u", 1, "a b"), ("u", 2, "c")]);
        assert_eq!(build_documents(&c)[0].tokens, vec!["a", "b", "c"]);
    }

    #[test]
    fn documents_restore_timestamp_order() {
        let posts = [("u", 30, "z"), ("u", 10, "x"), ("u", 20, "y"), ("v", 5, "q")];
        let c = corpus(&posts);
        // sort oracle
        let mut expect: Vec<_> = posts.iter().filter(|p| p.0 == "u").collect();
        expect.sort_by_key(|p| p.1);
        let expect: Vec<String> = expect.iter().map(|p| p.2.to_owned()).collect();
        assert_eq!(build_documents(&c)[0].tokens, expect);
    }

    #[test]
    fn url_only_user_is_empty() {
        let c = corpus(&[("u", 1, "https://a.b"), ("u", 2, "www.c.d @x")]);
        assert!(build_documents(&c)[0].is_empty());
    }

    #[test]
    fn corpus_users_sorted_and_unique() {
        let c = corpus(&[("b", 1, "x"), ("a", 1, "y"), ("b", 0, "z")]);
        let ids: Vec<_> = c.users().iter().map(|u| u.user.as_str()).collect();
        assert_eq!(ids, vec!["a", "b"]);
        assert_eq!(c.get("b").unwrap().posts[0].text, "z");
    }

    proptest! {
        #[test]
        fn preprocess_is_idempotent(s in "\\PC{0,80}") {
            let once = preprocess(&s);
            let twice = preprocess(&once.join(" "));
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn preprocess_idempotent_on_social_text(
            words in prop::collection::vec(
                prop::sample::select(vec![
                    "Hello", "@bob", "#Tag", "https://t.co/x", ":)", ":-(", "<3", "XD", "don't",
                    "--dash--", "caf\u{e9}", "\u{1F621}", "w00t!", "a.b", "'quoted'", "x-y-z",
                ]),
                0..12,
            )
        ) {
            let s = words.join(" ");
            let once = preprocess(&s);
            prop_assert_eq!(preprocess(&once.join(" ")), once.clone());
            for t in &once {
                prop_assert!(!t.starts_with('@') && !t.starts_with('#') && !t.contains("://"));
                prop_assert_eq!(t.to_lowercase(), t.clone());
            }
        }
    }
}
