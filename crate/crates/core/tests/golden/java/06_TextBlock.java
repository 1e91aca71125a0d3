public class Template {
    static final String HTML = """
        <p>Hello, "friend"</p>
        """;

    String render(String name) {
        return HTML.replace("friend", name);
    }
}
