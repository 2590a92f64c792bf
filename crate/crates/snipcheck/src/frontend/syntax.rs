//! Java and C# syntax checks on tree-sitter grammars.

use tree_sitter::{Language as Grammar, Node, Parser, Tree};

/// Longest token quoted in an error message.
const TOKEN_CHARS: usize = 40;

/// Node kinds a Java compilation unit may hold at top level.
const JAVA_TOP_LEVEL: &[&str] = &[
    "package_declaration",
    "import_declaration",
    "class_declaration",
    "interface_declaration",
    "enum_declaration",
    "annotation_type_declaration",
    "line_comment",
    "block_comment",
    ";",
];

/// Constructs that need a newer source level than 1.7.
const JAVA_POST_7: &[&str] = &[
    "lambda_expression",
    "method_reference",
    "inferred_parameters",
    "annotated_type",
    "receiver_parameter",
    "record_declaration",
    "compact_constructor_declaration",
    "module_declaration",
    "switch_rule",
    "yield_statement",
    "guard",
    "pattern",
    "type_pattern",
    "record_pattern",
    "underscore_pattern",
    "template_expression",
    "string_interpolation",
    "multiline_string_fragment",
    "permits",
];

pub const JAVA_GRAMMAR_VERSION: &str = "tree-sitter-java 0.23.5";
pub const CSHARP_GRAMMAR_VERSION: &str = "tree-sitter-c-sharp 0.23.5";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SyntaxLanguage {
    Java,
    CSharp,
}

impl SyntaxLanguage {
    fn grammar(self) -> Grammar {
        match self {
            SyntaxLanguage::Java => tree_sitter_java::LANGUAGE.into(),
            SyntaxLanguage::CSharp => tree_sitter_c_sharp::LANGUAGE.into(),
        }
    }
}

/// Syntax errors in `text`; empty when it parses.
pub fn syntax_errors(language: SyntaxLanguage, text: &str) -> Result<Vec<String>, String> {
    let mut parser = Parser::new();
    parser.set_language(&language.grammar()).map_err(|e| e.to_string())?;
    let tree = parser.parse(text, None).ok_or_else(|| "parser returned no tree".to_string())?;
    let mut errors = Vec::new();
    collect_errors(tree.root_node(), text, language, &mut errors);
    if language == SyntaxLanguage::Java && errors.is_empty() {
        java_compilation_unit(&tree, &mut errors);
        java_source_level(tree.root_node(), text, &mut errors);
    }
    Ok(errors)
}

fn collect_errors(node: Node<'_>, text: &str, language: SyntaxLanguage, out: &mut Vec<String>) {
    if node.is_missing() {
        let kind = node.kind();
        out.push(match language {
            SyntaxLanguage::Java => format!("Syntax error, insert \"{kind}\" to complete statement"),
            SyntaxLanguage::CSharp => format!("{kind} expected"),
        });
        return;
    }
    if node.is_error() {
        let token = first_token(node, text);
        out.push(match language {
            SyntaxLanguage::Java => format!("Syntax error on token \"{token}\", delete this token"),
            SyntaxLanguage::CSharp => format!("Invalid token '{token}'"),
        });
        return;
    }
    if !node.has_error() {
        return;
    }
    let before = out.len();
    let mut cursor = node.walk();
    for child in node.children(&mut cursor) {
        collect_errors(child, text, language, out);
    }
    // The error sits in a hidden child the cursor does not visit, such as
    // the missing name token inside `identifier`.
    if out.len() == before {
        let kind = node.kind();
        out.push(match language {
            SyntaxLanguage::Java => format!("Syntax error, insert \"{kind}\" to complete statement"),
            SyntaxLanguage::CSharp => format!("{kind} expected"),
        });
    }
}

fn first_token(node: Node<'_>, text: &str) -> String {
    let mut leaf = node;
    while let Some(child) = leaf.child(0) {
        leaf = child;
    }
    let raw = text.get(leaf.byte_range()).unwrap_or("");
    let raw = if raw.is_empty() { text.get(node.byte_range()).unwrap_or("") } else { raw };
    raw.split_whitespace().next().unwrap_or("").chars().take(TOKEN_CHARS).collect()
}

fn java_compilation_unit(tree: &Tree, out: &mut Vec<String>) {
    let root = tree.root_node();
    let mut cursor = root.walk();
    for child in root.children(&mut cursor) {
        if !JAVA_TOP_LEVEL.contains(&child.kind()) {
            out.push(format!(
                "Syntax error, {} outside a type declaration",
                child.kind().replace('_', " ")
            ));
        }
    }
}

fn java_source_level(node: Node<'_>, text: &str, out: &mut Vec<String>) {
    let kind = node.kind();
    let post_7 = JAVA_POST_7.contains(&kind)
        || (kind == "instanceof_expression" && node.child_by_field_name("name").is_some())
        || (kind == "string_literal" && text.get(node.byte_range()).is_some_and(|s| s.starts_with("\"\"\"")))
        || (kind == "modifiers" && is_default_method(node, text));
    if post_7 {
        out.push(format!(
            "Syntax error, {} is only available at source level 1.8 and above",
            describe_kind(node, text)
        ));
        return;
    }
    let mut cursor = node.walk();
    for child in node.children(&mut cursor) {
        java_source_level(child, text, out);
    }
}

fn describe_kind(node: Node<'_>, text: &str) -> String {
    match node.kind() {
        "modifiers" if is_default_method(node, text) => "default method".into(),
        "string_literal" => "text block".into(),
        "instanceof_expression" => "pattern matching".into(),
        other => other.replace('_', " "),
    }
}

fn is_default_method(modifiers: Node<'_>, text: &str) -> bool {
    let in_interface = modifiers
        .parent()
        .filter(|p| p.kind() == "method_declaration")
        .and_then(|m| m.parent())
        .is_some_and(|b| b.kind() == "interface_body");
    if !in_interface {
        return false;
    }
    let mut cursor = modifiers.walk();
    let found = modifiers
        .children(&mut cursor)
        .any(|c| text.get(c.byte_range()) == Some("default"));
    found
}
